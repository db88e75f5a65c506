"""Self-describing field containers: a grid header plus row-major values.

``.json`` files hold the values as a flat list (round-trips exactly through
``repr``); ``.npz`` files hold the same header as a JSON string next to the
raw array.
"""
import json
from pathlib import Path

import numpy as np

from ..errors import RejectedInputError
from .fields import Christoffel3Field, Grid, ScalarField, SymTensorField, VectorField

FORMAT = "wittenflow-field"
VERSION = 1

_KINDS = {
    "scalar": (ScalarField, "values"),
    "vector": (VectorField, "values"),
    "symtensor": (SymTensorField, "packed"),
    "christoffel": (Christoffel3Field, "values"),
}


def _kind_of(field):
    for kind, (cls, attr) in _KINDS.items():
        if type(field) is cls:
            return kind, getattr(field, attr)
    raise RejectedInputError(f"cannot serialise {type(field).__name__}")


def field_to_dict(field):
    kind, arr = _kind_of(field)
    return {
        "format": FORMAT,
        "version": VERSION,
        "kind": kind,
        "grid": field.grid.to_dict(),
        "shape": list(arr.shape),
        "values": arr.ravel(order="C").tolist(),
    }


def field_from_dict(d):
    if d.get("format") != FORMAT:
        raise RejectedInputError(f"not a {FORMAT} container")
    cls, _ = _KINDS[d["kind"]]
    grid = Grid.from_dict(d["grid"])
    arr = np.asarray(d["values"], dtype=float).reshape(d["shape"])
    return cls(grid, arr)


def save_field(path, field):
    path = Path(path)
    if path.suffix == ".npz":
        kind, arr = _kind_of(field)
        header = {"format": FORMAT, "version": VERSION, "kind": kind, "grid": field.grid.to_dict()}
        np.savez(path, header=json.dumps(header), values=arr)
    else:
        path.write_text(json.dumps(field_to_dict(field)))
    return path


def load_field(path):
    path = Path(path)
    if path.suffix == ".npz":
        with np.load(path) as data:
            header = json.loads(str(data["header"]))
            values = data["values"]
        header["shape"] = list(values.shape)
        header["values"] = values
        cls, _ = _KINDS[header["kind"]]
        return cls(Grid.from_dict(header["grid"]), values)
    return field_from_dict(json.loads(path.read_text()))
