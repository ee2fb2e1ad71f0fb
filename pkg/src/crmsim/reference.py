"""Exact inverse-Levy sampling by adaptive quadrature and root-finding.

This is the classical Ferguson-Klass procedure: every jump is obtained by
numerically inverting the tail mass function

    eta(x) = integral of nu(z) dz from x to the domain upper bound.

It is slow by construction (each inversion triggers many quadratures) and is
kept as the precision and speed baseline for the grid-based sampler.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy import integrate, optimize

from ._rng import split_streams
from .errors import BracketError, QuadratureConvergenceError
from .intensity import LevyIntensity

__all__ = [
    "QuadratureSettings",
    "exact_tail_mass",
    "exact_invert",
    "ferguson_klass_sample",
]

_X_TINY = 1e-300  # smallest bracket endpoint before declaring failure
_X_HUGE = 1e300


@dataclass(frozen=True)
class QuadratureSettings:
    abs_tol: float = 1e-13
    rel_tol: float = 1e-11
    max_subdivisions: int = 200
    x_rtol: float = 1e-10  # root-finding tolerance of the inverse, in x

    def __post_init__(self):
        if self.abs_tol <= 0 or self.rel_tol <= 0:
            raise ValueError("quadrature tolerances must be positive")
        if self.x_rtol < 4e-16:
            raise ValueError("x_rtol below root-finder resolution")


DEFAULT_SETTINGS = QuadratureSettings()


def _quad(fn, lo, hi, settings):
    value, err = integrate.quad(
        fn,
        lo,
        hi,
        epsabs=settings.abs_tol,
        epsrel=settings.rel_tol,
        limit=settings.max_subdivisions,
    )
    if not math.isfinite(value):
        raise QuadratureConvergenceError(
            f"quadrature on [{lo:g}, {hi:g}] returned {value}"
        )
    return value, err


def _panels(x, cut):
    """Geometric breakpoints from x toward cut (factor 100 per panel).

    Jump intensities blow up like x**-p toward zero, so a single adaptive
    pass over [x, cut] misses the mass concentrated within a few orders of
    magnitude of x; integrating panel by panel does not.
    """
    edges = [x]
    while edges[-1] * 100.0 < cut:
        edges.append(edges[-1] * 100.0)
    edges.append(cut)
    return edges


def exact_tail_mass(intensity: LevyIntensity, x: float, settings=DEFAULT_SETTINGS):
    """High-precision eta(x) via adaptive quadrature.

    The range up to max(1, x) is covered by geometric panels refined toward
    the singular endpoint at zero; the remainder runs in one adaptive pass
    (to the domain bound, or an infinite-range pass on the half-line).
    """
    upper = intensity.domain.upper
    if x >= upper:
        return 0.0
    if x <= 0.0:
        raise BracketError("tail mass requested at a non-positive point")
    fn = intensity.fn
    cut = min(max(1.0, x), upper)
    pieces = []
    errors = []
    edges = _panels(x, cut) if cut > x else [x]
    for lo, hi in zip(edges[:-1], edges[1:]):
        v, e = _quad(fn, lo, hi, settings)
        pieces.append(v)
        errors.append(e)
    if cut < upper:
        v, e = _quad(fn, cut, upper if intensity.domain.bounded else np.inf, settings)
        pieces.append(v)
        errors.append(e)
    value = math.fsum(pieces)
    err = math.fsum(errors)
    tol = max(settings.abs_tol * len(pieces), settings.rel_tol * abs(value))
    if err > max(tol * 50.0, 1e-9 * abs(value)):
        raise QuadratureConvergenceError(
            f"tail mass at x={x:g} reported error {err:.3e} for value {value:.6e}"
        )
    return value


def exact_invert(
    intensity: LevyIntensity,
    e: float,
    settings=DEFAULT_SETTINGS,
    upper_hint: float | None = None,
):
    """Generalized inverse of the tail mass: smallest x with eta(x) <= e.

    Brackets the root geometrically and polishes with Brent's method to
    relative tolerance 1e-10 in x.  ``upper_hint`` (a point already known to
    satisfy eta >= ... decreasing usage: any x with eta(x) <= e) shrinks the
    initial bracket; sorted arrival streams exploit this.
    """
    if e < 0:
        raise BracketError("arrival times must be non-negative")

    cache: dict[float, float] = {}

    def eta(x):
        if x not in cache:
            cache[x] = exact_tail_mass(intensity, x, settings)
        return cache[x]

    upper = intensity.domain.upper
    # Effectively-zero arrivals sit beyond quadrature resolution; return the
    # largest point we can certify.
    if e <= settings.abs_tol:
        e = settings.abs_tol

    # hi: a point with eta(hi) <= e.
    if intensity.domain.bounded:
        hi = upper
    elif upper_hint is not None and eta(upper_hint) <= e:
        hi = upper_hint
    else:
        hi = 1.0 if upper_hint is None else upper_hint
        while eta(hi) > e:
            hi *= 4.0
            if hi > _X_HUGE:
                raise BracketError("could not bracket the inverse from above")

    # lo: a point with eta(lo) >= e.
    lo = hi
    while eta(lo) < e:
        lo *= 0.25
        if lo < _X_TINY:
            raise BracketError(
                f"arrival {e:g} exceeds the reachable tail mass "
                f"({eta(_X_TINY * 4):.6e} at x={_X_TINY * 4:g})"
            )
    if eta(lo) == e:
        return lo

    root = optimize.brentq(
        lambda x: eta(x) - e, lo, hi, xtol=1e-280, rtol=settings.x_rtol, maxiter=200
    )
    return float(root)


def ferguson_klass_sample(
    intensity: LevyIntensity, rng, budget, settings=DEFAULT_SETTINGS
):
    """Exact CRM realization with the same stream semantics as the fast path.

    Seeding this and :func:`crmsim.sampler.sample` identically pairs the two
    samplers arrival-by-arrival.
    """
    from . import sampler as _sampler_mod  # deferred; sampler imports grid

    arrival_rng, location_rng = split_streams(rng)
    cutoff = None
    if budget.min_jump is not None:
        cutoff = exact_tail_mass(intensity, budget.min_jump, settings)
    arrivals = _sampler_mod.poisson_arrivals(arrival_rng, budget, mass_cutoff=cutoff)

    jumps = np.empty(arrivals.shape)
    hint = None
    for k, e in enumerate(arrivals):
        jumps[k] = exact_invert(intensity, float(e), settings, upper_hint=hint)
        hint = jumps[k]
    locations = location_rng.random(len(jumps))
    return _sampler_mod.CrmSample(
        jumps=jumps, arrivals=arrivals, locations=locations
    )
