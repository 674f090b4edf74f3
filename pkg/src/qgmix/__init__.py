"""q-Gaussians as variance mixtures of normals, with exchangeable limit theorems,
q-Brownian motion, a nonlinear Fokker–Planck solver, superstatistics and pricing."""

__version__ = "0.1.0"

from .numerics import (  # noqa: E402
    DomainError,
    KsReport,
    QuadratureError,
    QuadTolerance,
    RandomStream,
    integrate,
    ks_statistic,
    ks_two_sample,
    log_gamma,
    normal_cdf,
)
from .qgaussian import CmReport, QGaussian, c_q  # noqa: E402
from .vmon import (  # noqa: E402
    ContractError,
    GenericVMON,
    MixingLaw,
    c_prime_q,
    c_vq,
    exp_mixture_check,
    generic_vmon_sample,
    verify_mixture,
)

__all__ = [
    "__version__", "DomainError", "KsReport", "QuadratureError", "QuadTolerance", "RandomStream",
    "integrate", "ks_statistic", "ks_two_sample", "log_gamma", "normal_cdf", "CmReport", "QGaussian",
    "c_q", "ContractError", "GenericVMON", "MixingLaw", "c_prime_q", "c_vq", "exp_mixture_check",
    "generic_vmon_sample", "verify_mixture",
]
