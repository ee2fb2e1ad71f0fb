"""Jump intensities of completely random measures.

A :class:`LevyIntensity` bundles a non-negative jump intensity ``nu`` with
its domain, an optional power-law decomposition ``nu(x) = x**-kappa * g(x)``
(used by the mixed quadrature rule) and a hint about how its tail decays.
The standard catalog covers the gamma, sigma-stable, beta, generalized gamma
and stable-beta processes:

    gamma             M * x**-1 * exp(-x)                        on x > 0
    sigma-stable      sigma/G(1-sigma) * x**(-1-sigma)           on x > 0
    beta              M*c * x**-1 * (1-x)**(c-1)                 on 0 < x < 1
    generalized gamma M*a**(1-sigma)/G(1-sigma) * x**(-1-sigma) * exp(-a*x)
    stable-beta       M*G(1+c)/(G(1-sigma)G(c+sigma)) * x**(-1-sigma)
                                                    * (1-x)**(c+sigma-1)

where ``G`` is the gamma function.  Custom intensities wrap any callable.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np
from scipy.special import gammaln

from .errors import DecompositionMismatchError, DomainError, ParameterError

__all__ = [
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
]

# Tail decay hints.  AUTO defers classification to the grid search.
TAIL_EXPONENTIAL = "exponential"
TAIL_POLYNOMIAL = "polynomial"
TAIL_AUTO = "auto"


@dataclass(frozen=True)
class Domain:
    """Support of a jump intensity: (0, 1) or the positive half-line."""

    kind: str
    upper: float

    def __post_init__(self):
        if self.kind not in ("unit_interval", "positive_half_line"):
            raise ParameterError(f"unknown domain kind {self.kind!r}")
        if self.kind == "unit_interval" and self.upper != 1.0:
            raise ParameterError("unit interval domain must have upper = 1")
        if not self.upper > 0:
            raise ParameterError("domain upper bound must be positive")

    @property
    def bounded(self) -> bool:
        return math.isfinite(self.upper)


UNIT_INTERVAL = Domain("unit_interval", 1.0)
POSITIVE_HALF_LINE = Domain("positive_half_line", math.inf)


@dataclass(frozen=True)
class Decomposition:
    """Factorization nu(x) = x**-kappa * g(x) with kappa >= 1.

    ``g`` must accept scalars and ndarrays and stay smooth on the domain
    interior; the mixed quadrature rule integrates the x**-kappa factor in
    closed form and freezes g at the left bin edge.
    """

    kappa: float
    g: Callable

    def __post_init__(self):
        if not self.kappa >= 1.0:
            raise ParameterError(f"decomposition requires kappa >= 1, got {self.kappa}")


@dataclass(frozen=True)
class LevyIntensity:
    """A jump intensity together with its domain and optional structure."""

    fn: Callable
    domain: Domain
    decomposition: Optional[Decomposition] = None
    tail_hint: str = TAIL_AUTO
    name: str = "custom"

    def evaluate(self, x):
        """Evaluate nu at ``x`` (scalar or array), checking the domain.

        ``x`` must satisfy 0 < x <= upper; a non-finite result at the upper
        endpoint (an intensity diverging at 1) is also a domain error.
        """
        arr = np.asarray(x, dtype=float)
        if np.any(arr <= 0.0) or np.any(arr > self.domain.upper):
            raise DomainError(
                f"{self.name}: evaluation point outside (0, {self.domain.upper}]"
            )
        out = self.fn(arr)
        if not np.all(np.isfinite(out)):
            raise DomainError(
                f"{self.name}: intensity is not finite at the evaluation point "
                "(diverging upper endpoint?)"
            )
        return out if arr.ndim else float(out)

    def __call__(self, x):
        return self.evaluate(x)


def _check_decomposition(fn, domain, dec, rtol, n_probes=16):
    """Probe x**-kappa * g(x) against fn(x) at log-spaced interior points."""
    hi = 0.5 if domain.bounded else 100.0
    probes = np.geomspace(1e-8, hi, n_probes)
    nu = np.asarray(fn(probes), dtype=float)
    recomposed = probes ** (-dec.kappa) * np.asarray(dec.g(probes), dtype=float)
    scale = np.maximum(np.abs(nu), 1e-300)
    rel = np.abs(recomposed - nu) / scale
    worst = int(np.argmax(rel))
    if rel[worst] > rtol:
        raise DecompositionMismatchError(
            f"decomposition mismatch: x**-{dec.kappa} * g deviates from nu by "
            f"relative {rel[worst]:.3e} at x={probes[worst]:.6g}"
        )


def make_custom(fn, domain, decomposition=None, tail_hint=TAIL_AUTO, name="custom"):
    """Wrap a user-supplied intensity function.

    A supplied decomposition is validated at 16 log-spaced probe points with
    relative tolerance 1e-9.
    """
    if tail_hint not in (TAIL_EXPONENTIAL, TAIL_POLYNOMIAL, TAIL_AUTO):
        raise ParameterError(f"unknown tail hint {tail_hint!r}")
    if decomposition is not None:
        _check_decomposition(fn, domain, decomposition, rtol=1e-9)
    return LevyIntensity(
        fn=fn,
        domain=domain,
        decomposition=decomposition,
        tail_hint=tail_hint,
        name=name,
    )


def decompose(intensity: LevyIntensity) -> Optional[Decomposition]:
    """Return the stored decomposition, or None when there is none."""
    return intensity.decomposition


def _require(cond, message):
    if not cond:
        raise ParameterError(message)


@dataclass(frozen=True)
class GammaParams:
    M: float

    def __post_init__(self):
        _require(self.M > 0, f"gamma process requires M > 0, got M={self.M}")


@dataclass(frozen=True)
class SigmaStableParams:
    sigma: float

    def __post_init__(self):
        _require(
            0 < self.sigma < 1,
            f"sigma-stable process requires 0 < sigma < 1, got sigma={self.sigma}",
        )


@dataclass(frozen=True)
class BetaParams:
    M: float
    c: float

    def __post_init__(self):
        _require(self.M > 0, f"beta process requires M > 0, got M={self.M}")
        _require(self.c > 0, f"beta process requires c > 0, got c={self.c}")


@dataclass(frozen=True)
class GeneralizedGammaParams:
    M: float
    sigma: float
    a: float

    def __post_init__(self):
        _require(self.M > 0, f"generalized gamma requires M > 0, got M={self.M}")
        _require(
            0 < self.sigma < 1,
            f"generalized gamma requires 0 < sigma < 1, got sigma={self.sigma}",
        )
        _require(self.a > 0, f"generalized gamma requires a > 0, got a={self.a}")


@dataclass(frozen=True)
class StableBetaParams:
    M: float
    sigma: float
    c: float

    def __post_init__(self):
        _require(self.M > 0, f"stable-beta requires M > 0, got M={self.M}")
        _require(
            0 < self.sigma < 1,
            f"stable-beta requires 0 < sigma < 1, got sigma={self.sigma}",
        )
        _require(self.c > 0, f"stable-beta requires c > 0, got c={self.c}")


def gamma_process(M: float) -> LevyIntensity:
    return make_standard(GammaParams(M))


def sigma_stable_process(sigma: float) -> LevyIntensity:
    return make_standard(SigmaStableParams(sigma))


def beta_process(M: float, c: float) -> LevyIntensity:
    return make_standard(BetaParams(M, c))


def generalized_gamma_process(M: float, sigma: float, a: float) -> LevyIntensity:
    return make_standard(GeneralizedGammaParams(M, sigma, a))


def stable_beta_process(M: float, sigma: float, c: float) -> LevyIntensity:
    return make_standard(StableBetaParams(M, sigma, c))


def make_standard(params) -> LevyIntensity:
    """Build one of the cataloged intensities from validated parameters."""
    if isinstance(params, GammaParams):
        M = params.M

        def fn(x, M=M):
            return M * np.exp(-x) / x

        def g(x, M=M):
            return M * np.exp(-x)

        return LevyIntensity(
            fn, POSITIVE_HALF_LINE, Decomposition(1.0, g), TAIL_EXPONENTIAL, "gamma"
        )

    if isinstance(params, SigmaStableParams):
        s = params.sigma
        const = s * math.exp(-gammaln(1.0 - s))

        def fn(x, const=const, s=s):
            return const * x ** (-1.0 - s)

        def g(x, const=const):
            return const * np.ones_like(np.asarray(x, dtype=float))

        return LevyIntensity(
            fn,
            POSITIVE_HALF_LINE,
            Decomposition(1.0 + s, g),
            TAIL_POLYNOMIAL,
            "sigma-stable",
        )

    if isinstance(params, BetaParams):
        M, c = params.M, params.c

        def fn(x, M=M, c=c):
            return M * c * (1.0 - x) ** (c - 1.0) / x

        def g(x, M=M, c=c):
            return M * c * (1.0 - x) ** (c - 1.0)

        return LevyIntensity(fn, UNIT_INTERVAL, Decomposition(1.0, g), TAIL_AUTO, "beta")

    if isinstance(params, GeneralizedGammaParams):
        M, s, a = params.M, params.sigma, params.a
        const = M * a ** (1.0 - s) * math.exp(-gammaln(1.0 - s))

        def fn(x, const=const, s=s, a=a):
            return const * x ** (-1.0 - s) * np.exp(-a * x)

        def g(x, const=const, a=a):
            return const * np.exp(-a * x)

        return LevyIntensity(
            fn,
            POSITIVE_HALF_LINE,
            Decomposition(1.0 + s, g),
            TAIL_EXPONENTIAL,
            "generalized-gamma",
        )

    if isinstance(params, StableBetaParams):
        M, s, c = params.M, params.sigma, params.c
        const = M * math.exp(gammaln(1.0 + c) - gammaln(1.0 - s) - gammaln(c + s))

        def fn(x, const=const, s=s, c=c):
            return const * x ** (-1.0 - s) * (1.0 - x) ** (c + s - 1.0)

        def g(x, const=const, s=s, c=c):
            return const * (1.0 - x) ** (c + s - 1.0)

        return LevyIntensity(
            fn, UNIT_INTERVAL, Decomposition(1.0 + s, g), TAIL_AUTO, "stable-beta"
        )

    raise ParameterError(f"unknown process parameters: {params!r}")
