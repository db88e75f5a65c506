"""JSON experiment configuration and its static validation.

Analytic fields are given as truncated Fourier series
``{"const": c, "terms": [{"k": [k1, ...], "cos": a, "sin": b}, ...]}`` with
integer mode numbers in units of 2 pi / period.  Periods may be given as
``periods`` or, exactly, as ``periods_over_pi``.
"""
import copy
import json
import math
from dataclasses import dataclass, field
from pathlib import Path

from ..errors import ConfigError

METRIC_FAMILIES = ("flat", "conformal")
SCHEDULE_KINDS = ("static", "expanding", "scaled", "conformal", "tabulated", "lott")
INITIAL_KINDS = ("constant", "exp_fourier", "heat_kernel")


@dataclass
class ExperimentConfig:
    name: str
    grid: dict
    geometry: dict = field(default_factory=lambda: {"metric": {"family": "flat"}})
    schedule: dict = field(default_factory=lambda: {"kind": "static"})
    initial: dict = field(default_factory=lambda: {"kind": "constant"})
    solver: dict = field(default_factory=dict)
    parameters: dict = field(default_factory=dict)
    checks: list = field(default_factory=list)
    tolerances: dict = field(default_factory=dict)
    fiber: dict = None
    log_sobolev: dict = None
    convergence: dict = None
    output: str = None
    seed: int = 0
    description: str = ""

    KEYS = ("name", "grid", "geometry", "schedule", "initial", "solver", "parameters", "checks",
            "tolerances", "fiber", "log_sobolev", "convergence", "output", "seed", "description")

    @classmethod
    def from_dict(cls, d):
        if not isinstance(d, dict):
            raise ConfigError("config must be a JSON object")
        unknown = sorted(set(d) - set(cls.KEYS))
        if unknown:
            raise ConfigError([f"unknown top-level keys: {', '.join(unknown)}"])
        missing = [k for k in ("name", "grid") if k not in d]
        if missing:
            raise ConfigError([f"missing required key '{k}'" for k in missing])
        return cls(**copy.deepcopy(d))

    @classmethod
    def load(cls, path):
        path = Path(path)
        try:
            data = json.loads(path.read_text())
        except json.JSONDecodeError as exc:
            raise ConfigError(f"{path}: invalid JSON ({exc})")
        return cls.from_dict(data)

    def to_dict(self):
        out = {k: copy.deepcopy(getattr(self, k)) for k in self.KEYS}
        return {k: v for k, v in out.items() if v is not None}

    # -- derived values -------------------------------------------------------

    @property
    def dim(self):
        return len(self.grid.get("nodes", []))

    @property
    def periods(self):
        if "periods_over_pi" in self.grid:
            return [float(p) * math.pi for p in self.grid["periods_over_pi"]]
        return [float(p) for p in self.grid.get("periods", [2 * math.pi] * self.dim)]

    @property
    def m(self):
        return self.parameters.get("m", self.dim)

    @property
    def q(self):
        return self.parameters.get("q", (self.fiber or {}).get("q", 1))

    def solver_value(self, key, default=None):
        return self.solver.get(key, default)


def _fourier_diagnostics(spec, where, dim):
    out = []
    if spec is None:
        return out
    if not isinstance(spec, dict):
        return [f"{where}: Fourier series must be an object with 'const' and 'terms'"]
    if not _is_number(spec.get("const", 0.0)):
        out.append(f"{where}.const must be a number")
    for i, term in enumerate(spec.get("terms", [])):
        k = term.get("k") if isinstance(term, dict) else None
        k = [k] if isinstance(k, int) else k
        if not isinstance(k, list) or len(k) != dim or not all(isinstance(x, int) for x in k):
            out.append(f"{where}.terms[{i}].k must list {dim} integer mode numbers")
        for key in ("cos", "sin"):
            if isinstance(term, dict) and not _is_number(term.get(key, 0.0)):
                out.append(f"{where}.terms[{i}].{key} must be a number")
    return out


def _is_number(x):
    return isinstance(x, (int, float)) and not isinstance(x, bool) and math.isfinite(x)


def validate(config, registry=None):
    """Every static problem with ``config``; an empty list means it can run."""
    from .checks import CHECKS

    registry = CHECKS if registry is None else registry
    diags = []
    nodes = config.grid.get("nodes")
    if not isinstance(nodes, list) or not nodes or not all(isinstance(n, int) for n in nodes):
        return ["grid.nodes must be a non-empty list of integers"]
    for n in nodes:
        if n < 8 or n % 2:
            diags.append(f"grid.nodes: {n} must be even and >= 8")
    periods = config.periods
    if len(periods) != len(nodes):
        diags.append("grid periods must have one entry per axis")
    elif not all(p > 0 for p in periods):
        diags.append("grid periods must be positive")
    dim = len(nodes)

    metric = config.geometry.get("metric", {"family": "flat"})
    if metric.get("family") not in METRIC_FAMILIES:
        diags.append(f"geometry.metric.family must be one of {METRIC_FAMILIES}")
    diags += _fourier_diagnostics(metric.get("a"), "geometry.metric.a", dim)
    diags += _fourier_diagnostics(config.geometry.get("potential"), "geometry.potential", dim)

    kind = config.schedule.get("kind")
    if kind not in SCHEDULE_KINDS:
        diags.append(f"schedule.kind must be one of {SCHEDULE_KINDS}")
    if kind == "scaled":
        coeffs = config.schedule.get("coeffs")
        if not isinstance(coeffs, list) or not coeffs or not all(_is_number(c) for c in coeffs):
            diags.append("schedule.coeffs must list polynomial coefficients of s(t)")
    if kind == "conformal":
        diags += _fourier_diagnostics(config.schedule.get("b"), "schedule.b", dim)
    if kind == "tabulated":
        times, scales = config.schedule.get("times"), config.schedule.get("scales")
        if not isinstance(times, list) or not isinstance(scales, list) or len(times) != len(scales) or len(times) < 2:
            diags.append("schedule.times and schedule.scales must be equal-length lists (>= 2 entries)")
        elif any(s <= 0 for s in scales):
            diags.append("schedule.scales must be positive")

    ikind = config.initial.get("kind")
    if ikind not in INITIAL_KINDS:
        diags.append(f"initial.kind must be one of {INITIAL_KINDS}")
    if ikind == "exp_fourier":
        diags += _fourier_diagnostics(config.initial.get("field"), "initial.field", dim)
    if ikind == "heat_kernel":
        center = config.initial.get("center", [0.0] * dim)
        if not isinstance(center, list) or len(center) != dim:
            diags.append(f"initial.center must list {dim} coordinates")

    t0 = config.solver.get("t0")
    T = config.solver.get("T")
    needs_time = any(registry[c].needs in ("heat", "lott", "conjugate") for c in config.checks if c in registry)
    if needs_time:
        if not _is_number(t0) or t0 <= 0:
            diags.append("solver.t0 must be positive")
        if not _is_number(T) or (_is_number(t0) and T <= t0):
            diags.append("solver.T must exceed solver.t0")
    dt_out = config.solver.get("dt_out")
    if dt_out is not None and (not _is_number(dt_out) or dt_out <= 0):
        diags.append("solver.dt_out must be positive")
    safety = config.solver.get("safety", 0.2)
    if not _is_number(safety) or not 0 < safety <= 1:
        diags.append("solver.safety must lie in (0, 1]")

    m = config.m
    if not _is_number(m):
        diags.append("parameters.m must be a number")
        m = dim
    if m < dim:
        diags.append(f"parameters.m = {m} is below the manifold dimension n = {dim}")
    K = config.parameters.get("K", 0.0)
    if K != "auto" and (not _is_number(K) or K < 0):
        diags.append(f"parameters.K must be non-negative or \"auto\", got {K!r}")
    q = config.q
    if not _is_number(q) or q <= 0:
        diags.append("parameters.q must be positive")

    if not config.checks:
        diags.append("checks: select at least one check")
    for name in config.checks:
        check = registry.get(name)
        if check is None:
            diags.append(f"checks: unknown check '{name}'")
            continue
        if check.m_formula and not m > dim:
            diags.append(f"check '{name}' uses an m-dimensional formula and needs m > n (got m={m}, n={dim})")
        if check.needs == "lott" and kind != "lott":
            diags.append(f"check '{name}' needs schedule.kind = \"lott\"")
        if check.needs == "heat" and kind == "lott" and not check.lott_ok:
            diags.append(f"check '{name}' needs a metric schedule, not a Lott flow")
        if check.needs_fiber and config.fiber is None:
            diags.append(f"check '{name}' needs a 'fiber' block")
        if check.needs_log_sobolev and not (config.log_sobolev or {}).get(check.needs_log_sobolev):
            diags.append(f"check '{name}' needs log_sobolev.{check.needs_log_sobolev}")
        if check.needs_convergence and not config.convergence:
            diags.append(f"check '{name}' needs a 'convergence' block")
    for name, tol in config.tolerances.items():
        if name not in registry:
            diags.append(f"tolerances: unknown check '{name}'")
        elif not _is_number(tol) or tol <= 0:
            diags.append(f"tolerances.{name} must be positive, got {tol!r}")
    if any(registry[c].needs_time_series for c in config.checks if c in registry):
        if dt_out is None:
            diags.append("solver.dt_out is required by the selected checks")
        elif _is_number(t0) and _is_number(T) and _is_number(dt_out) and dt_out > 0:
            count = (T - t0) / dt_out
            if abs(count - round(count)) > 1e-6:
                diags.append("solver.dt_out must divide T - t0")
            elif config.solver.get("richardson", True) and round(count) + 1 < 5:
                diags.append("Richardson differences need at least five output times")
    ls = config.log_sobolev
    if ls is not None:
        shift = ls.get("shift", {})
        for key, times in (("oracle_times", ls.get("oracle_times", [])),
                           ("monotone_times", ls.get("monotone_times", [])),
                           ("shift.times", shift.get("times", []))):
            if not isinstance(times, list) or not all(_is_number(t) and t > 0 for t in times):
                diags.append(f"log_sobolev.{key} must be a list of positive numbers")
        if shift and (not _is_number(shift.get("K", 1.0)) or shift.get("K", 1.0) < 0):
            diags.append("log_sobolev.shift.K must be non-negative")
        if shift and _is_number(shift.get("m", m)) and shift.get("m", m) < dim:
            diags.append(f"log_sobolev.shift.m must be at least n = {dim}")
        if not isinstance(ls.get("restarts", 5), int) or ls.get("restarts", 5) < 0:
            diags.append("log_sobolev.restarts must be a non-negative integer")
    if config.fiber is not None:
        fq = config.fiber.get("q", 1)
        if not isinstance(fq, int) or fq < 1:
            diags.append("fiber.q must be a positive integer for an assembled product")
        fn = config.fiber.get("nodes", 8)
        if not isinstance(fn, int) or fn < 8 or fn % 2:
            diags.append("fiber.nodes must be even and >= 8")
    if not isinstance(config.seed, int):
        diags.append("seed must be an integer")
    return diags
