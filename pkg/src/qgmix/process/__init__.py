"""q-Brownian motion, the nonlinear Fokker–Planck solver and superstatistical Langevin dynamics."""

from .fpe import (
    CflError,
    FpeGrid,
    FpeTrajectory,
    GridSpec,
    barenblatt_profile,
    barenblatt_scale,
    barenblatt_time,
    fpe_solve,
    iqr_scale,
    shape_error,
    width_exponent,
)
from .langevin import (
    LangevinConfig,
    LangevinResult,
    langevin_simulate,
    superstat_beta_law,
    superstat_closed_form,
    superstat_factor,
)
from .qbm import (
    QbmEnsemble,
    QbmPath,
    chapman_kolmogorov_gap,
    increment_autocorrelation,
    increment_stationarity,
    marginal_ks,
    qbm_transition_density,
    sample_qbm_ensemble,
    sample_qbm_path,
    transition_density_closed_form,
)

__all__ = [
    "CflError", "FpeGrid", "FpeTrajectory", "GridSpec", "barenblatt_profile", "barenblatt_scale",
    "barenblatt_time", "fpe_solve", "iqr_scale", "shape_error", "width_exponent",
    "LangevinConfig", "LangevinResult", "langevin_simulate", "superstat_beta_law",
    "superstat_closed_form", "superstat_factor",
    "QbmEnsemble", "QbmPath", "chapman_kolmogorov_gap", "increment_autocorrelation",
    "increment_stationarity", "marginal_ks", "qbm_transition_density", "sample_qbm_ensemble",
    "sample_qbm_path", "transition_density_closed_form",
]
