"""Built-in experiments: one per acceptance criterion plus a few supplementary runs."""
import copy

# log of the bump exp(2 cos(x - 2)), i.e. 2 cos 2 cos x + 2 sin 2 sin x
BUMP = {"const": 0.0, "terms": [{"k": [1], "cos": -0.8322936730942848, "sin": 1.8185948536513634}]}

_ENTROPY_BASE = {
    "grid": {"nodes": [256], "periods_over_pi": [2]},
    "geometry": {"metric": {"family": "flat"}, "potential": {"terms": [{"k": [1], "cos": 0.5}]}},
    "schedule": {"kind": "static"},
    "initial": {"kind": "exp_fourier", "field": BUMP},
    "solver": {"t0": 0.05, "T": 0.5, "dt_out": 1e-3, "safety": 0.2, "richardson": True},
}

PRESETS = {
    "warped-identities": {
        "description": "warped product closed forms against direct computation on the assembled product",
        "grid": {"nodes": [128], "periods_over_pi": [2]},
        "geometry": {"metric": {"family": "flat"}, "potential": {"terms": [{"k": [1], "sin": 1.0}]}},
        "fiber": {"q": 1, "nodes": 16},
        "checks": ["warped_christoffel", "warped_laplacian", "warped_hessian_split", "warped_ricci"],
    },
    "entropy-dissipation": dict(
        copy.deepcopy(_ENTROPY_BASE),
        description="second time derivative of the entropy against its closed form",
        parameters={"m": 3},
        checks=["d2H", "dH"],
    ),
    "w-entropy": dict(
        copy.deepcopy(_ENTROPY_BASE),
        description="dW_m/dt formula, W_m = d(tH_m)/dt and the stationary self-test",
        parameters={"m": 3},
        checks=["dWm", "Wm_def", "stationary_selftest"],
        tolerances={"stationary_selftest": 1e-10},
    ),
    "super-flow-monotonicity": {
        "description": "expanding metric (1+t) g_flat with conjugate potential; certified W_m monotonicity",
        "grid": {"nodes": [128], "periods_over_pi": [2]},
        "schedule": {"kind": "expanding"},
        "initial": {"kind": "exp_fourier", "field": BUMP},
        "solver": {"t0": 0.05, "T": 1.0, "dt_out": 0.05, "richardson": True},
        "parameters": {"m": 2},
        "checks": ["super_flow_certificate", "W_m_monotone"],
    },
    "gaussian-baseline": {
        "description": "heat kernel on T^1(20 pi), N = 512: W_n should vanish",
        "grid": {"nodes": [512], "periods_over_pi": [20]},
        "initial": {"kind": "heat_kernel", "center": [31.41592653589793]},
        "solver": {"t0": 0.01, "T": 0.1, "dt_out": 1e-3},
        "parameters": {"m": 1},
        "checks": ["gaussian_W", "gaussian_dW"],
    },
    "k-variants": {
        "description": "Harnack certificate, dW_mK/dt formula and W_mK monotonicity with K from Ric_m(L)",
        "grid": {"nodes": [128], "periods_over_pi": [2]},
        "geometry": {"metric": {"family": "flat"}, "potential": {"terms": [{"k": [1], "sin": 0.3}]}},
        "initial": {"kind": "exp_fourier", "field": BUMP},
        "solver": {"t0": 0.05, "T": 0.5, "dt_out": 1e-3},
        "parameters": {"m": 3, "K": "auto"},
        "checks": ["harnack", "dWmK", "W_mK_monotone"],
    },
    "lott-flow": {
        "description": "Lott flow against product Ricci flow, conjugate adjointness, W_q dissipation",
        "grid": {"nodes": [64], "periods_over_pi": [2]},
        "geometry": {"metric": {"family": "flat"}, "potential": {"terms": [{"k": [1], "sin": 0.3}]}},
        "schedule": {"kind": "lott", "terminal": {"terms": [{"k": [1], "cos": 0.5403023058681398,
                                                             "sin": 0.8414709848078965}]}},
        "initial": {"kind": "exp_fourier", "field": {"terms": [{"k": [2], "sin": 1.0}]}},
        "fiber": {"q": 1, "nodes": 8},
        "solver": {"t0": 0.05, "T": 0.5, "dt_out": 1e-3},
        "parameters": {"q": 1},
        "checks": ["lott_product_flow", "lott_adjoint", "lott_Wq_dissipation", "lott_Wq_monotone"],
    },
    "log-sobolev": {
        "description": "mu(1) on flat T^1 against gradient flow, K-shift identity, mu monotone on the expanding flow",
        "grid": {"nodes": [64], "periods_over_pi": [2]},
        "schedule": {"kind": "expanding"},
        "solver": {"t0": 0.25, "T": 1.0},
        "parameters": {"m": 1},
        "log_sobolev": {"oracle_times": [1.0], "shift": {"m": 2, "K": 1.0, "times": [0.5]},
                        "monotone_times": [0.25, 0.5, 1.0], "restarts": 5},
        "checks": ["mu_oracle", "mu_K_shift", "mu_monotone"],
    },
    "convergence-orders": dict(
        copy.deepcopy(_ENTROPY_BASE),
        description="second order in dt_out without Richardson; spectral floor after doubling N",
        grid={"nodes": [32], "periods_over_pi": [2]},
        parameters={"m": 3},
        convergence={"formulas": ["d2H", "dWm"], "nodes": [16]},
        checks=["convergence_dt", "convergence_space"],
    ),
    "stationary": {
        "description": "constant density on a static flat torus: every residual vanishes",
        "grid": {"nodes": [64], "periods_over_pi": [2]},
        "solver": {"t0": 0.05, "T": 0.5, "dt_out": 1e-2},
        "parameters": {"m": 3},
        "checks": ["dH_abs", "d2H_abs", "dW_abs", "dWm_abs", "Wm_def_abs"],
    },
    "gaussian-baseline-fine": {
        "description": "gaussian-baseline with N = 1024, which resolves the initial kernel",
        "grid": {"nodes": [1024], "periods_over_pi": [20]},
        "initial": {"kind": "heat_kernel", "center": [31.41592653589793]},
        "solver": {"t0": 0.01, "T": 0.1, "dt_out": 1e-3},
        "parameters": {"m": 1},
        "checks": ["gaussian_W", "gaussian_dW"],
    },
}

# acceptance criterion number -> preset
CRITERIA = {
    1: "warped-identities",
    2: "entropy-dissipation",
    3: "w-entropy",
    4: "super-flow-monotonicity",
    5: "gaussian-baseline",
    6: "k-variants",
    7: "lott-flow",
    8: "log-sobolev",
    9: "convergence-orders",
}


def preset(name):
    """A fresh config dict for a built-in preset."""
    if name not in PRESETS:
        raise KeyError(f"unknown preset '{name}'; available: {', '.join(sorted(PRESETS))}")
    d = copy.deepcopy(PRESETS[name])
    d["name"] = name
    d.setdefault("output", name)
    return d


def list_presets():
    width = max(len(n) for n in PRESETS)
    return "\n".join(f"{n:<{width}}  {PRESETS[n]['description']}" for n in PRESETS)
