"""crmsim: fast simulation of completely random measures.

The library tabulates the tail mass of a Levy jump intensity once on an
adaptive geometric grid, then turns unit Poisson arrival times into jumps by
piecewise-linear inversion.  An exact quadrature/root-finding sampler is
included as the reference for precision and speed comparisons, along with
diagnostics and two worked applications (compound random measures and a
species-sampling occupancy model).
"""

from ._kernels import BACKEND as kernel_backend
from .grid import GridConfig, Partition, TailModel, build_partition
from .intensity import (
    BetaParams,
    Decomposition,
    Domain,
    GammaParams,
    GeneralizedGammaParams,
    LevyIntensity,
    POSITIVE_HALF_LINE,
    SigmaStableParams,
    StableBetaParams,
    UNIT_INTERVAL,
    beta_process,
    decompose,
    gamma_process,
    generalized_gamma_process,
    make_custom,
    make_standard,
    sigma_stable_process,
    stable_beta_process,
)
from .quadrature import Envelope, approx_intensity, build_envelope
from .reference import QuadratureSettings, exact_invert, exact_tail_mass, ferguson_klass_sample
from .sampler import CrmSample, SamplerBudget, resample, sample

__version__ = "0.1.0"

__all__ = [
    "kernel_backend",
    "GridConfig",
    "Partition",
    "TailModel",
    "build_partition",
    "Domain",
    "UNIT_INTERVAL",
    "POSITIVE_HALF_LINE",
    "Decomposition",
    "LevyIntensity",
    "GammaParams",
    "SigmaStableParams",
    "BetaParams",
    "GeneralizedGammaParams",
    "StableBetaParams",
    "make_standard",
    "make_custom",
    "decompose",
    "gamma_process",
    "sigma_stable_process",
    "beta_process",
    "generalized_gamma_process",
    "stable_beta_process",
    "Envelope",
    "build_envelope",
    "approx_intensity",
    "QuadratureSettings",
    "exact_tail_mass",
    "exact_invert",
    "ferguson_klass_sample",
    "CrmSample",
    "SamplerBudget",
    "sample",
    "resample",
    "__version__",
]
