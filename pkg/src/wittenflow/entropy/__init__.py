"""Entropy functionals, dissipation formulas, Harnack certificates and trajectory reports."""
from .functionals import (
    HarnackCertificate,
    H_m,
    H_mK,
    W_closed,
    W_m_closed,
    W_mK_closed,
    W_mK_potential_form,
    W_q_ricci,
    curvature_lower_bound,
    d2H_rhs,
    dH_rhs,
    dW_rhs,
    dWm_rhs,
    dWmK_rhs,
    dWq_rhs,
    fisher_information,
    harnack_defect,
    harnack_field,
    harnack_series,
    li_yau_identity_defect,
    shannon_H,
)
from .report import EntropyReport, formula_residuals, time_derivative

__all__ = [
    "EntropyReport",
    "HarnackCertificate",
    "H_m",
    "H_mK",
    "W_closed",
    "W_mK_closed",
    "W_mK_potential_form",
    "W_m_closed",
    "W_q_ricci",
    "curvature_lower_bound",
    "d2H_rhs",
    "dH_rhs",
    "dW_rhs",
    "dWm_rhs",
    "dWmK_rhs",
    "dWq_rhs",
    "fisher_information",
    "formula_residuals",
    "harnack_defect",
    "harnack_field",
    "harnack_series",
    "li_yau_identity_defect",
    "shannon_H",
    "time_derivative",
]
