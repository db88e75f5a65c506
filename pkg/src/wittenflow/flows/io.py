"""Trajectories on disk: one field container per state plus ``index.json``.

index.json::

    {"format": "wittenflow-trajectory", "version": 1, "kind": "heat",
     "metadata": {...}, "states": [{"t": 0.05, "metric": "g_0000.npz",
     "potential": "f_0000.npz", "u": "u_0000.npz"}, ...]}
"""
import json
from pathlib import Path

from ..errors import RejectedInputError
from ..geometry import GeometrySnapshot, load_field, save_field
from .heat import FlowState, FlowTrajectory

FORMAT = "wittenflow-trajectory"
VERSION = 1


def _jsonable(meta):
    return {k: (v.item() if hasattr(v, "item") else v) for k, v in meta.items()}


def save_trajectory(traj, directory):
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    entries = []
    for i, state in enumerate(traj):
        names = {"metric": f"g_{i:04d}.npz", "potential": f"f_{i:04d}.npz", "u": f"u_{i:04d}.npz"}
        save_field(directory / names["metric"], state.snapshot.metric)
        save_field(directory / names["potential"], state.snapshot.potential)
        save_field(directory / names["u"], state.u)
        entries.append({"t": state.t, **names})
    index = {"format": FORMAT, "version": VERSION, "kind": "heat",
             "metadata": _jsonable(traj.metadata), "states": entries}
    (directory / "index.json").write_text(json.dumps(index, indent=1))
    return directory


def load_trajectory(directory):
    directory = Path(directory)
    index = json.loads((directory / "index.json").read_text())
    if index.get("format") != FORMAT:
        raise RejectedInputError(f"{directory} is not a {FORMAT} directory")
    states = []
    for e in index["states"]:
        snap = GeometrySnapshot(load_field(directory / e["metric"]), load_field(directory / e["potential"]))
        states.append(FlowState(e["t"], snap, load_field(directory / e["u"])))
    return FlowTrajectory(states, index["metadata"])
