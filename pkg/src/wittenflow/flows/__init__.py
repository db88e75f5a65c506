"""Heat flow under metric schedules, the Lott flow and its conjugate heat equation."""
from .heat import FlowState, FlowTrajectory, evolve_heat, heat_step, stable_dt
from .io import load_trajectory, save_trajectory
from .lott import (
    ConjugateState,
    ConjugateTrajectory,
    LottState,
    LottTrajectory,
    conjugate_heat_solve,
    eta_from_phi,
    evolve_lott,
    evolve_ricci_flow,
    lott_flow_step,
    lott_rates,
)
from .schedule import MetricSchedule, certify_super_flow, conjugate_potential, super_ricci_defect

__all__ = [
    "ConjugateState",
    "ConjugateTrajectory",
    "FlowState",
    "FlowTrajectory",
    "LottState",
    "LottTrajectory",
    "MetricSchedule",
    "certify_super_flow",
    "conjugate_heat_solve",
    "conjugate_potential",
    "eta_from_phi",
    "evolve_heat",
    "evolve_lott",
    "evolve_ricci_flow",
    "heat_step",
    "load_trajectory",
    "lott_flow_step",
    "lott_rates",
    "save_trajectory",
    "stable_dt",
    "super_ricci_defect",
]
