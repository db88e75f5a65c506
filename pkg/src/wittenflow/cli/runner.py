"""Execute an ExperimentConfig and write its artifacts.

Layout of ``<root>/<output>/``:

* ``report.json``: config, one entry per check and the overall status
  (schema below);
* ``entropy.csv`` plus ``plot/*.dat`` when a heat-flow report was built;
* ``lott_entropy.csv`` when the conjugate Lott entropy was evaluated.

report.json schema::

    {"name": str, "status": "pass" | "fail" | "error" | "invalid",
     "exit_code": 0 | 1 | 2 | 3,
     "checks": [{"name", "measured", "tolerance", "passed", "detail"}],
     "diagnostics": [str], "config": {...}, "K": float | null}

Nothing time-dependent is written, so reruns are byte-identical.
"""
import csv
import json
import logging
import os
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from ..errors import ConfigError, WittenFlowError
from .checks import CHECKS, Context
from .config import ExperimentConfig, validate

log = logging.getLogger(__name__)

OUTPUT_ROOT_ENV = "WITTENFLOW_OUTPUT_ROOT"
EXIT_PASS, EXIT_FAIL, EXIT_INVALID, EXIT_ERROR = 0, 1, 2, 3


@dataclass
class RunVerdict:
    name: str
    checks: list = field(default_factory=list)
    status: str = "pass"
    diagnostics: list = field(default_factory=list)
    output_dir: Path = None

    @property
    def passed(self):
        return self.status == "pass"

    @property
    def exit_code(self):
        return {"pass": EXIT_PASS, "fail": EXIT_FAIL, "invalid": EXIT_INVALID, "error": EXIT_ERROR}[self.status]

    def summary_lines(self):
        lines = [f"[{'PASS' if c.passed else 'FAIL'}] {c.name}: measured {c.measured:.3e} (tol {c.tolerance:.1e})"
                 for c in self.checks]
        lines += [f"  ! {d}" for d in self.diagnostics]
        lines.append(f"{self.name}: {self.status.upper()}")
        return lines


def output_root(explicit=None):
    return Path(explicit or os.environ.get(OUTPUT_ROOT_ENV, "runs"))


def _write_csv(path, header, rows):
    with Path(path).open("w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(header)
        for row in rows:
            w.writerow([f"{x:.16e}" for x in row])


def _write_artifacts(ctx, verdict, out):
    out.mkdir(parents=True, exist_ok=True)
    if "report" in ctx.__dict__:
        ctx.report.to_csv(out / "entropy.csv")
        ctx.report.write_plot_data(out / "plot")
    if "lott_entropy" in ctx.__dict__:
        taus, W, lhs, rhs = ctx.lott_entropy
        _write_csv(out / "lott_entropy.csv", ["tau", "W_q", "dWq_lhs", "dWq_rhs"], zip(taus, W, lhs, rhs))
    k = ctx.__dict__.get("K")
    report = {
        "name": verdict.name,
        "status": verdict.status,
        "exit_code": verdict.exit_code,
        "checks": [c.to_dict() for c in verdict.checks],
        "diagnostics": verdict.diagnostics,
        "config": ctx.config.to_dict(),
        "K": float(k) if k is not None else None,
    }
    (out / "report.json").write_text(json.dumps(report, indent=1, default=_jsonable) + "\n")


def _jsonable(x):
    if isinstance(x, np.generic):
        return x.item()
    if isinstance(x, np.ndarray):
        return x.tolist()
    raise TypeError(f"cannot serialise {type(x).__name__}")


def run(config, root=None, write=True):
    """Validate, execute every selected check and (optionally) write artifacts."""
    if not isinstance(config, ExperimentConfig):
        config = ExperimentConfig.from_dict(config)
    verdict = RunVerdict(config.name)
    diags = validate(config)
    out = output_root(root) / (config.output or config.name)
    verdict.output_dir = out
    if diags:
        verdict.status = "invalid"
        verdict.diagnostics = diags
        return verdict
    ctx = Context(config)
    try:
        for name in config.checks:
            log.info("%s: running %s", config.name, name)
            verdict.checks.append(CHECKS[name].run(ctx, config.tolerances.get(name)))
        verdict.status = "pass" if all(c.passed for c in verdict.checks) else "fail"
    except (WittenFlowError, np.linalg.LinAlgError) as exc:
        verdict.status = "error"
        verdict.diagnostics.append(f"{type(exc).__name__}: {exc}")
    if write:
        _write_artifacts(ctx, verdict, out)
    return verdict


def load_config(source):
    """A config from a JSON path or a built-in preset name."""
    from .presets import PRESETS, preset

    path = Path(source)
    if path.exists():
        return ExperimentConfig.load(path)
    if source in PRESETS:
        return ExperimentConfig.from_dict(preset(source))
    raise ConfigError(f"'{source}' is neither a config file nor a preset name")
