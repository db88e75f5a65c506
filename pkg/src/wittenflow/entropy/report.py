"""Finite-difference time derivatives of entropies along a trajectory against their closed-form rates.

CSV layout: one row per output time, columns in ``EntropyReport.CSV_COLUMNS``
order, floats as ``%.16e`` (17 significant digits), undefined entries
(derivatives at the ends of the series, m-formulas when m <= n) as ``nan``.
"""
import csv
import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from ..errors import ParameterError, RejectedInputError
from ..flows.schedule import super_ricci_defect
from ..geometry.calculus import bakry_emery, min_rel_eigenvalue
from .functionals import (
    H_m,
    H_mK,
    W_closed,
    W_m_closed,
    W_mK_closed,
    d2H_rhs,
    dH_rhs,
    dW_rhs,
    dWm_rhs,
    dWmK_rhs,
    shannon_H,
)

MONOTONE_SLACK = 1e-8
CERTIFY_TOL = 1e-10

# (name, lhs column, rhs column)
RESIDUALS = (
    ("dH", "dH_lhs", "dH_rhs"),
    ("d2H", "d2H_lhs", "d2H_rhs"),
    ("dW", "dW_lhs", "dW_rhs"),
    ("dWm", "dWm_lhs", "dWm_rhs"),
    ("dWmK", "dWmK_lhs", "dWmK_rhs"),
    ("Wm_def", "W_m_def", "W_m"),
)


def time_derivative(values, dt, order=1, richardson=True):
    """Central differences on a uniform series; ``nan`` where the stencil does not fit.

    With ``richardson`` the step-dt and step-2dt differences are combined as
    (4 D(dt) - D(2dt)) / 3, which needs two neighbours on each side.
    """
    v = np.asarray(values, dtype=float)
    out = np.full(v.shape, np.nan)
    n = len(v)

    def d(step):
        h = step * dt
        res = np.full(v.shape, np.nan)
        if n > 2 * step:
            c = slice(step, n - step)
            hi, lo = v[2 * step:], v[: n - 2 * step]
            if order == 1:
                res[c] = (hi - lo) / (2 * h)
            elif order == 2:
                res[c] = (hi - 2 * v[c] + lo) / h ** 2
            else:
                raise ParameterError("only first and second derivatives are supported")
        return res

    if richardson:
        out = (4 * d(1) - d(2)) / 3
    else:
        out = d(1)
    return out


def _uniform_step(times):
    times = np.asarray(times, dtype=float)
    if len(times) < 3:
        raise RejectedInputError("need at least three output times")
    steps = np.diff(times)
    dt = float(np.mean(steps))
    if np.max(np.abs(steps - dt)) > 1e-9 * max(dt, abs(times[-1])):
        raise RejectedInputError("irregular timestamps: output times must be uniformly spaced")
    return dt


@dataclass
class EntropyReport:
    times: np.ndarray
    m: float
    K: float
    dt: float
    richardson: bool
    columns: dict
    verdicts: dict = field(default_factory=dict)

    CSV_COLUMNS = (
        "t", "H", "H_m", "H_mK", "W", "W_m", "W_mK", "W_m_def",
        "dH_lhs", "dH_rhs", "d2H_lhs", "d2H_rhs", "dW_lhs", "dW_rhs",
        "dWm_lhs", "dWm_rhs", "dWmK_lhs", "dWmK_rhs",
        "res_dH", "res_d2H", "res_dW", "res_dWm", "res_dWmK", "res_Wm_def",
    )

    def column(self, name):
        if name == "t":
            return self.times
        if name.startswith("res_"):
            return self.residual(name[4:])
        return self.columns[name]

    def residual(self, name):
        """LHS - RHS, recomputed from the stored sides."""
        for key, lhs, rhs in RESIDUALS:
            if key == name:
                return self.columns[lhs] - self.columns[rhs]
        raise KeyError(name)

    def interior(self, name):
        r = self.residual(name)
        return np.isfinite(r)

    def max_abs_residual(self, name):
        r = self.residual(name)
        r = r[np.isfinite(r)]
        return float(np.max(np.abs(r))) if r.size else float("nan")

    def max_rel_residual(self, name):
        rhs = dict((k, c) for k, _, c in RESIDUALS)[name]
        r = self.residual(name)
        denom = np.abs(self.columns[rhs])
        ok = np.isfinite(r)
        if not np.any(ok):
            return float("nan")
        return float(np.max(np.abs(r[ok]) / denom[ok]))

    # -- serialisation ----------------------------------------------------------

    def to_csv(self, path):
        path = Path(path)
        with path.open("w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(self.CSV_COLUMNS)
            cols = [self.column(c) for c in self.CSV_COLUMNS]
            for i in range(len(self.times)):
                w.writerow([f"{c[i]:.16e}" for c in cols])
        return path

    def to_dict(self):
        def clean(a):
            return [None if not np.isfinite(x) else float(x) for x in np.asarray(a)]

        return {
            "m": self.m,
            "K": self.K,
            "dt": self.dt,
            "richardson": self.richardson,
            "columns": {c: clean(self.column(c)) for c in self.CSV_COLUMNS},
            "max_abs_residual": {k: _finite(self.max_abs_residual(k)) for k, _, _ in RESIDUALS},
            "max_rel_residual": {k: _finite(self.max_rel_residual(k)) for k, _, _ in RESIDUALS},
            "verdicts": self.verdicts,
        }

    def to_json(self, path):
        path = Path(path)
        path.write_text(json.dumps(self.to_dict(), indent=1))
        return path

    def write_plot_data(self, directory):
        """One two-column ``t value`` file per series."""
        directory = Path(directory)
        directory.mkdir(parents=True, exist_ok=True)
        written = []
        for c in self.CSV_COLUMNS[1:]:
            p = directory / f"{c}.dat"
            np.savetxt(p, np.column_stack([self.times, self.column(c)]), fmt="%.16e", header=f"t {c}")
            written.append(p)
        return written


def _finite(x):
    return float(x) if np.isfinite(x) else None


def _monotone(values, slack=MONOTONE_SLACK):
    inc = np.diff(np.asarray(values))
    return bool(np.all(inc <= slack)), float(np.max(inc)) if inc.size else float("-inf")


def _verdict(certified, holds, worst_increase, margin):
    return {
        "certified": bool(certified),
        "holds": bool(holds) if certified else None,
        "measured_holds": bool(holds),
        "worst_increase": worst_increase,
        "defect_margin": margin,
    }


def monotonicity_verdicts(times, series, schedule, m, K, snapshots):
    """Verdicts that are only asserted when the matching defect certificate holds."""
    out = {}
    n = snapshots[0].dim
    if m > n:
        margin = min(float(super_ricci_defect(schedule, m, 0.0, t).min()) for t in times)
        holds, worst = _monotone(series["W_m"])
        out["W_m_nonincreasing"] = _verdict(margin >= -CERTIFY_TOL, holds, worst, margin)
        margin_k = min(float(super_ricci_defect(schedule, m, K, t).min()) for t in times)
        holds, worst = _monotone(series["W_mK"])
        out["W_mK_nonincreasing"] = _verdict(margin_k >= -CERTIFY_TOL, holds, worst, margin_k)
    margin_h = min(
        float(min_rel_eigenvalue(s, schedule.rate(t).scale(0.5) + bakry_emery(s)).min())
        for t, s in zip(times, snapshots)
    )
    d2 = series["d2H_lhs"]
    d2 = d2[np.isfinite(d2)]
    holds = bool(np.all(d2 <= MONOTONE_SLACK))
    out["H_concave"] = _verdict(margin_h >= -CERTIFY_TOL, holds, float(np.max(d2)) if d2.size else None, margin_h)
    return out


def formula_residuals(trajectory, schedule, m, K=0.0, richardson=True):
    """Entropies, both sides of every dissipation formula and monotonicity verdicts."""
    times = trajectory.times
    dt = _uniform_step(times)
    if richardson and len(times) < 5:
        raise RejectedInputError("Richardson differences need at least five output times")
    if K < 0:
        raise ParameterError(f"K must be non-negative, got {K}")
    states = list(trajectory)
    n = states[0].snapshot.dim
    with_m = m > n
    nan = np.full(len(states), np.nan)

    def series(fn):
        return np.array([fn(s) for s in states])

    H = series(shannon_H)
    W = series(W_closed)
    cols = {
        "H": H,
        "H_m": series(lambda s: H_m(s, m)),
        "H_mK": series(lambda s: H_mK(s, m, K)),
        "W": W,
        "W_m": series(lambda s: W_m_closed(s, m)),
        "W_mK": series(lambda s: W_mK_closed(s, m, K)),
        "dH_rhs": series(dH_rhs),
        "d2H_rhs": series(lambda s: d2H_rhs(s, schedule)),
        "dW_rhs": series(lambda s: dW_rhs(s, schedule)),
        "dWm_rhs": series(lambda s: dWm_rhs(s, schedule, m)) if with_m else nan.copy(),
        "dWmK_rhs": series(lambda s: dWmK_rhs(s, schedule, m, K)) if with_m else nan.copy(),
    }
    d1 = time_derivative(W, dt, 1, richardson)
    cols["dH_lhs"] = time_derivative(H, dt, 1, richardson)
    cols["d2H_lhs"] = time_derivative(H, dt, 2, richardson)
    cols["dW_lhs"] = d1
    # explicit t-dependence of W_m and W_mK is differentiated exactly
    cols["dWm_lhs"] = d1 - m / (2 * times) if with_m else nan.copy()
    cols["dWmK_lhs"] = d1 - m / (2 * times) - m * (K + K * K * times / 2) if with_m else nan.copy()
    cols["W_m_def"] = (
        time_derivative(times * H, dt, 1, richardson)
        - 0.5 * m * (1 + np.log(4 * np.pi * times)) - 0.5 * m
    )
    verdicts = monotonicity_verdicts(times, cols, schedule, m, K, [s.snapshot for s in states])
    return EntropyReport(times, m, K, dt, richardson, cols, verdicts)
