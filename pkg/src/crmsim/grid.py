"""Adaptive partition construction for grid-based tail-mass tables.

The partition is geometric between ``x_lower`` and an anchor (1 on bounded
domains, the detected tail point on the half-line).  On the half-line the
tail beyond the anchor is extended with either equally spaced points whose
bin masses decay geometrically (exponential tails) or geometrically spaced
points with constant mass ratio (polynomial tails).  When an arrival time
exceeds the tabulated mass, extra points are prepended below ``x_lower``
using the local power-law behaviour of the intensity.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace
from typing import Optional

import numpy as np

from . import reference
from .errors import (
    MassExhaustedError,
    NonIntegrableTailError,
    ParameterError,
    TailDetectionError,
)
from .intensity import TAIL_EXPONENTIAL, TAIL_POLYNOMIAL, LevyIntensity

__all__ = [
    "GridConfig",
    "TailModel",
    "Partition",
    "geometric_points",
    "choose_x_upper",
    "detect_tail",
    "exponential_ratio",
    "extend_exponential_tail",
    "estimate_p",
    "extend_polynomial_tail",
    "plan_lower_extension",
    "extend_lower",
    "extend_lower_to",
    "build_partition",
]

METHOD_MIXED = "mixed"
METHOD_TRAPEZIUM = "trapezium"

_X_UPPER_CAP = 1e6
_TAIL_CANDIDATE_MAX = 1024  # 2**10


@dataclass(frozen=True)
class GridConfig:
    """User-facing knobs of the partition and quadrature stage.

    ``x_lower`` defaults to 1e-10 for the mixed method and 1e-5 for the
    trapezium method; ``x_thr`` marks where the power-law bin rule hands over
    to the trapezium rule.  Pass ``spacing`` instead of ``n_points`` to fix
    the geometric multiplier (the point count is then derived).
    """

    x_lower: float = 1e-10
    n_points: int = 1000
    spacing: Optional[float] = None
    eps_tail: float = 1e-10
    x_thr: float = 1e-5
    tail_search_tol: float = 1e-8
    method: str = METHOD_MIXED

    def __post_init__(self):
        if not 0.0 < self.x_lower < 1.0:
            raise ParameterError(f"x_lower must lie in (0, 1), got {self.x_lower}")
        if self.n_points < 2:
            raise ParameterError(f"n_points must be >= 2, got {self.n_points}")
        if self.spacing is not None and not self.spacing > 1.0:
            raise ParameterError(f"spacing must exceed 1, got {self.spacing}")
        if not self.eps_tail > 0.0:
            raise ParameterError("eps_tail must be positive")
        if not self.x_lower <= self.x_thr:
            raise ParameterError(
                f"x_lower ({self.x_lower}) must not exceed x_thr ({self.x_thr})"
            )
        if not self.tail_search_tol > 0.0:
            raise ParameterError("tail_search_tol must be positive")
        if self.method not in (METHOD_MIXED, METHOD_TRAPEZIUM):
            raise ParameterError(f"unknown method {self.method!r}")

    @classmethod
    def for_trapezium(cls, x_lower=1e-5, **kwargs):
        kwargs.setdefault("x_thr", x_lower)
        return cls(x_lower=x_lower, method=METHOD_TRAPEZIUM, **kwargs)


TAIL_NONE = "none"


@dataclass(frozen=True)
class TailModel:
    """Detected tail class beyond the anchor point.

    Exponential tails carry the fitted decay rate ``a`` and the extension
    bin width ``dx``; polynomial tails carry the exponent ``p``.
    """

    kind: str
    a: float = math.nan
    dx: float = math.nan
    p: float = math.nan

    @classmethod
    def none(cls):
        return cls(TAIL_NONE)

    @classmethod
    def exponential(cls, a, dx):
        return cls(TAIL_EXPONENTIAL, a=a, dx=dx)

    @classmethod
    def polynomial(cls, p):
        return cls(TAIL_POLYNOMIAL, p=p)


@dataclass(frozen=True)
class Partition:
    """Ordered grid points plus the tail-section bookkeeping.

    ``points[:n_geometric]`` form the geometric section with multiplier
    ``c``; the remainder is the tail extension whose bin masses
    (``tail_bin_masses``) come from the tail model rather than a quadrature
    rule.
    """

    points: np.ndarray
    c: float
    x_tail: float
    x_upper: float
    tail_model: TailModel
    n_geometric: int
    tail_bin_masses: np.ndarray

    @property
    def x_lower(self) -> float:
        return float(self.points[0])

    def __len__(self):
        return len(self.points)


def geometric_points(x_lo: float, x_hi: float, n: int) -> np.ndarray:
    """n points from x_lo to x_hi with constant ratio, endpoints exact."""
    if not x_lo < x_hi:
        raise ParameterError(f"need x_lo < x_hi, got {x_lo} >= {x_hi}")
    if x_lo <= 0:
        raise ParameterError("geometric grids require positive endpoints")
    if n < 2:
        raise ParameterError(f"need at least 2 points, got {n}")
    pts = np.exp(np.linspace(math.log(x_lo), math.log(x_hi), n))
    pts[0] = x_lo
    pts[-1] = x_hi
    return pts


def _spacing(x_lo, x_hi, n):
    return 10.0 ** (math.log10(x_hi / x_lo) / (n - 1))


def _resolve_span(config, x_lo, x_hi):
    """Point count and multiplier for the geometric section."""
    if config.spacing is not None:
        n = max(2, int(math.ceil(math.log(x_hi / x_lo) / math.log(config.spacing))) + 1)
    else:
        n = config.n_points
    return n, _spacing(x_lo, x_hi, n)


def choose_x_upper(intensity, eps_tail, settings=None, cap=_X_UPPER_CAP):
    """Smallest searched point whose high-precision tail mass is < eps_tail.

    Doubles from 1 until the mass drops below the threshold (bisecting back
    afterwards) and raises once the cap is passed, which on the half-line
    signals a polynomial tail that must be handled by its closed-form model.
    """
    if intensity.domain.bounded:
        return intensity.domain.upper
    settings = settings or reference.DEFAULT_SETTINGS

    def tail(x):
        return reference.exact_tail_mass(intensity, x, settings)

    lo = None
    hi = 1.0
    while tail(hi) >= eps_tail:
        lo = hi
        hi *= 2.0
        if hi > cap:
            raise NonIntegrableTailError(
                f"tail mass still {tail(cap):.3e} >= {eps_tail:g} at the "
                f"search cap x={cap:g}"
            )
    if lo is None:
        return hi
    # bisect to ~1% so the returned point is not needlessly far out
    while hi / lo > 1.01:
        mid = math.sqrt(lo * hi)
        if tail(mid) < eps_tail:
            hi = mid
        else:
            lo = mid
    return hi


def exponential_ratio(a: float, dx: float) -> float:
    """Ratio of adjacent equal-width bin areas under an exp(-a*x) tail."""
    t = a * dx
    if t < 1e-8:
        return 1.0 + t + 0.5 * t * t
    return math.expm1(t) / -math.expm1(-t)


def estimate_p(K: float, c: float) -> float:
    """Power-law exponent from the mass ratio K of adjacent geometric bins."""
    if not K > 0:
        raise ParameterError(f"mass ratio must be positive, got {K}")
    if not c > 1:
        raise ParameterError(f"geometric multiplier must exceed 1, got {c}")
    return 1.0 - math.log(K) / math.log(c)


def _fit_exponential_rate(intensity, x_tail, dx, n_fit=8):
    """Least-squares slope of -log nu over the start of the extension window."""
    xs = x_tail + dx * np.arange(n_fit, dtype=float)
    ys = np.log(intensity.fn(xs))
    slope = np.polyfit(xs, ys, 1)[0]
    return -float(slope)


def _first_tail_bin_mass(intensity, x_tail, width, settings):
    return reference.exact_tail_mass(intensity, x_tail, settings) - \
        reference.exact_tail_mass(intensity, x_tail + width, settings)


def detect_tail(intensity, config, settings=None):
    """Locate the tail point and classify the decay beyond it.

    Candidates are the geometric points 1, 2, 4, ..., 1024.  For each one
    the total mass predicted by the exponential model (equal-width bins,
    geometrically decaying masses) and by the polynomial model (geometric
    bins, constant mass ratio) is compared against high-precision quadrature;
    the first candidate whose better model lands within ``tail_search_tol``
    relative to the overall mass scale eta(x_lower) is accepted.
    """
    if intensity.domain.bounded:
        return intensity.domain.upper, TailModel.none()
    settings = settings or reference.DEFAULT_SETTINGS
    tol_scale = reference.exact_tail_mass(intensity, config.x_lower, settings)
    budget = config.tail_search_tol * tol_scale

    hint = intensity.tail_hint
    try_exp = hint in (TAIL_EXPONENTIAL, "auto")
    try_poly = hint in (TAIL_POLYNOMIAL, "auto")

    x_t = 1.0
    while x_t <= _TAIL_CANDIDATE_MAX:
        target = reference.exact_tail_mass(intensity, x_t, settings)
        n_geo, c = _resolve_span(config, config.x_lower, x_t)
        best_err = math.inf
        best_model = None

        if try_exp:
            dx = x_t * (1.0 - 1.0 / c)
            a = _fit_exponential_rate(intensity, x_t, dx)
            if a > 0:
                m0 = _first_tail_bin_mass(intensity, x_t, dx, settings)
                model_total = m0 / -math.expm1(-a * dx)
                err = abs(model_total - target)
                if err < best_err:
                    best_err = err
                    best_model = TailModel.exponential(a, dx)

        if try_poly:
            m0 = _first_tail_bin_mass(intensity, x_t, x_t * (c - 1.0), settings)
            m1 = reference.exact_tail_mass(intensity, x_t * c, settings) - \
                reference.exact_tail_mass(intensity, x_t * c * c, settings)
            if m0 > 0 and m1 > 0:
                p = estimate_p(m1 / m0, c)
                K = c ** (1.0 - p)
                if K < 1.0:
                    model_total = m0 / (1.0 - K)
                    err = abs(model_total - target)
                    if err < best_err:
                        best_err = err
                        best_model = TailModel.polynomial(p)

        if best_model is not None and best_err <= budget:
            return x_t, best_model
        x_t *= 2.0

    raise TailDetectionError(
        "no candidate up to x=1024 matched an exponential or polynomial "
        "tail within tolerance; consider the trapezium method with an "
        "explicit upper cutoff"
    )


def extend_exponential_tail(partition, intensity, a, settings=None):
    """Equally spaced tail points with geometrically decaying bin masses.

    The spacing is the width of the last geometric bin; masses follow
    m0 / k(a, dx)**i, anchored to the quadrature mass of the first tail bin.
    Returns (appended points, masses); both empty for a zero-width tail.
    """
    settings = settings or reference.DEFAULT_SETTINGS
    x_tail, x_upper = partition.x_tail, partition.x_upper
    if x_upper <= x_tail:
        return np.empty(0), np.empty(0)
    dx = float(partition.points[-1] - partition.points[-2])
    n_bins = max(1, int(math.ceil((x_upper - x_tail) / dx)))
    pts = x_tail + dx * np.arange(1, n_bins + 1)
    pts[-1] = x_tail + dx * n_bins
    m0 = _first_tail_bin_mass(intensity, x_tail, dx, settings)
    k = exponential_ratio(a, dx)
    masses = m0 * (1.0 / k) ** np.arange(n_bins, dtype=float)
    return pts, masses


def extend_polynomial_tail(partition, intensity, p, settings=None):
    """Geometric tail points with constant mass ratio c**(1-p).

    Masses are anchored to the quadrature mass of the first tail bin; the
    number of points is read off the partition's x_tail/x_upper and c.
    """
    settings = settings or reference.DEFAULT_SETTINGS
    x_tail, x_upper, c = partition.x_tail, partition.x_upper, partition.c
    if x_upper <= x_tail:
        return np.empty(0), np.empty(0)
    n_bins = max(1, int(round(math.log(x_upper / x_tail) / math.log(c))))
    pts = np.exp(math.log(x_tail) + math.log(c) * np.arange(1, n_bins + 1))
    pts[-1] = x_upper if abs(pts[-1] - x_upper) < 1e-9 * x_upper else pts[-1]
    m0 = _first_tail_bin_mass(intensity, x_tail, x_tail * (c - 1.0), settings)
    K = c ** (1.0 - p)
    masses = m0 * K ** np.arange(n_bins, dtype=float)
    return pts, masses


def _extra_bin_count(E_max, eta0, w, rho):
    """Number of extra geometric bins below x_lower needed to cover E_max.

    ``rho = c**(p-1)`` is the mass growth factor going down; ``w`` is the
    mass of the current leftmost bin.  Uses the geometric-series count for
    rho != 1 and plain division for rho == 1.
    """
    if w <= 0:
        raise MassExhaustedError("leftmost bin carries no mass; cannot extend")
    t = math.log(rho)
    if abs(t) < 1e-12:
        return max(1, int(math.ceil((E_max - eta0) / w)))
    arg = 1.0 + (E_max / w) * math.expm1(t)
    if arg <= 0.0:
        raise MassExhaustedError(
            f"arrival time {E_max:g} exceeds the total remaining mass of a "
            "finite-activity intensity"
        )
    return max(1, int(math.ceil(math.log(arg) / t)))


def _power_bin_masses(w, rho, n):
    """Masses of n new bins below x_lower under the x**-p model, deepest last."""
    return w * rho ** np.arange(1, n + 1, dtype=float)


def plan_lower_extension(x_lower, c, masses, E_max=None, n=None):
    """Points and model masses for a downward extension.

    Either ``E_max`` (extend until the cumulative mass covers it) or ``n``
    (fixed bin count) must be given.  The local exponent p comes from the two
    leftmost existing bin masses; new bin masses follow the x**-p model
    anchored at the leftmost bin.  Returns (points ascending, masses aligned
    to those points, p).
    """
    masses = np.asarray(masses, dtype=float)
    if len(masses) < 2:
        raise MassExhaustedError("need at least two bins to extrapolate downwards")
    eta0 = float(masses.sum())
    p = estimate_p(float(masses[1] / masses[0]), c)
    rho = c ** (p - 1.0)
    w = float(masses[0])
    if n is None:
        n = _extra_bin_count(E_max, eta0, w, rho)
        new_masses = _power_bin_masses(w, rho, n)
        # top up if the ceil'd count still falls marginally short (possible
        # for rho < 1 where the series formula ignores the tabulated mass)
        while eta0 + new_masses.sum() < E_max:
            if rho < 1.0 and w * rho ** (n + 1) < 1e-300:
                raise MassExhaustedError(
                    f"arrival time {E_max:g} exceeds the total remaining mass"
                )
            n += 1
            new_masses = _power_bin_masses(w, rho, n)
    else:
        new_masses = _power_bin_masses(w, rho, n)
    new_pts = np.exp(math.log(x_lower) - math.log(c) * np.arange(n, 0, -1))
    return new_pts, new_masses[::-1], p


def extend_lower(partition, masses, E_max, intensity=None):
    """Prepend geometric points below x_lower until the mass covers E_max.

    No-op when the tabulated mass already covers E_max.  Raises
    :class:`MassExhaustedError` when the x**-p model says the remaining mass
    below x_lower is finite and insufficient.
    """
    masses = np.asarray(masses, dtype=float)
    if E_max <= float(masses.sum()):
        return partition, masses
    new_pts, new_masses, _ = plan_lower_extension(
        partition.x_lower, partition.c, masses, E_max=E_max
    )
    new_partition = replace(
        partition,
        points=np.concatenate([new_pts, partition.points]),
        n_geometric=partition.n_geometric + len(new_pts),
    )
    return new_partition, np.concatenate([new_masses, masses])


def extend_lower_to(partition, masses, x_target):
    """Prepend geometric points until x_lower <= x_target (same mass model)."""
    masses = np.asarray(masses, dtype=float)
    x_lo = partition.x_lower
    if x_target >= x_lo:
        return partition, masses
    n = max(1, int(math.ceil(math.log(x_lo / x_target) / math.log(partition.c))))
    new_pts, new_masses, _ = plan_lower_extension(x_lo, partition.c, masses, n=n)
    new_partition = replace(
        partition,
        points=np.concatenate([new_pts, partition.points]),
        n_geometric=partition.n_geometric + n,
    )
    return new_partition, np.concatenate([new_masses, masses])


def build_partition(intensity, config, settings=None):
    """Geometric section plus tail extension for the given intensity.

    Bounded domains span [x_lower, 1].  On the half-line the tail class is
    detected first; exponential tails extend with equal spacing up to the
    quadrature-searched cutoff, polynomial tails with geometric spacing up to
    the closed-form cutoff (p > 1 required for a finite table).
    """
    settings = settings or reference.DEFAULT_SETTINGS
    if intensity.domain.bounded:
        anchor = intensity.domain.upper
        n, c = _resolve_span(config, config.x_lower, anchor)
        pts = geometric_points(config.x_lower, anchor, n)
        return Partition(
            points=pts,
            c=c,
            x_tail=anchor,
            x_upper=anchor,
            tail_model=TailModel.none(),
            n_geometric=n,
            tail_bin_masses=np.empty(0),
        )

    x_tail, model = detect_tail(intensity, config, settings)
    n, c = _resolve_span(config, config.x_lower, x_tail)
    geo = geometric_points(config.x_lower, x_tail, n)

    if model.kind == TAIL_EXPONENTIAL:
        x_upper = max(x_tail, choose_x_upper(intensity, config.eps_tail, settings))
        partial = Partition(geo, c, x_tail, x_upper, model, n, np.empty(0))
        tail_pts, tail_masses = extend_exponential_tail(
            partial, intensity, model.a, settings
        )
    else:
        if model.p <= 1.0:
            raise NonIntegrableTailError(
                f"polynomial tail with p={model.p:.4f} <= 1 has infinite mass"
            )
        tail_here = reference.exact_tail_mass(intensity, x_tail, settings)
        x_upper = x_tail * (config.eps_tail / tail_here) ** (1.0 / (1.0 - model.p))
        n_ext = int(math.ceil(math.log(x_upper / x_tail) / math.log(c)))
        x_upper = x_tail * c ** max(1, n_ext)
        partial = Partition(geo, c, x_tail, x_upper, model, n, np.empty(0))
        tail_pts, tail_masses = extend_polynomial_tail(
            partial, intensity, model.p, settings
        )

    pts = np.concatenate([geo, tail_pts]) if len(tail_pts) else geo
    x_upper_eff = float(pts[-1])
    return Partition(
        points=pts,
        c=c,
        x_tail=x_tail,
        x_upper=x_upper_eff,
        tail_model=model,
        n_geometric=n,
        tail_bin_masses=tail_masses,
    )
