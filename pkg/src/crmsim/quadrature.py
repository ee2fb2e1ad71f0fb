"""Bin masses and the piecewise approximate intensity.

Two quadrature rules fill the envelope table:

* mixed       g(x_k) * closed-form integral of z**-kappa, for bins whose
              left edge sits below ``x_thr`` (requires a decomposition);
              trapezium above.
* trapezium   0.5 * (nu(x_k) + nu(x_k+1)) * width everywhere at or above
              ``x_thr``; below it the x**-p rule with the locally estimated
              exponent p and prefactor nu(x_i) / x_i**-p.

A bin straddling ``x_thr`` is split there, so each bin lives in exactly one
regime.  The cumulative tail table is accumulated backwards with compensated
summation by the kernel backend.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace
from typing import Optional

import numpy as np

from . import grid as _grid
from . import _kernels
from .errors import DomainError, MissingDecompositionError, ParameterError
from .grid import METHOD_MIXED, METHOD_TRAPEZIUM, GridConfig, Partition

__all__ = [
    "Envelope",
    "power_integral",
    "bin_mass_mixed",
    "bin_mass_trapezium",
    "build_envelope",
    "approx_intensity",
    "approx_intensity_many",
    "extend_envelope_lower",
    "extend_envelope_to",
    "interp_tail_mass",
]

_KIND_POWER = 0
_KIND_LINEAR = 1


@dataclass(frozen=True)
class Envelope:
    """Tabulated bin masses with their cumulative tail and nu-tilde shape.

    ``points`` are the partition points with ``x_thr`` inserted when it
    splits a bin.  ``cum_tail[i]`` is the tabulated mass from points[i] to
    x_upper (cum_tail[-1] = 0).  Per-bin shape parameters reproduce the
    piecewise approximation: power bins evaluate coef * x**-expo, linear
    bins interpolate nu between the knots.
    """

    partition: Partition
    method: str
    x_thr: float
    points: np.ndarray
    bin_masses: np.ndarray
    cum_tail: np.ndarray
    bin_kind: np.ndarray
    bin_coef: np.ndarray
    bin_expo: np.ndarray
    nu_knots: np.ndarray

    @property
    def total_mass(self) -> float:
        return float(self.cum_tail[0])

    @property
    def x_lower(self) -> float:
        return float(self.points[0])

    @property
    def x_upper(self) -> float:
        return float(self.points[-1])


def power_integral(x_lo, x_hi, expo):
    """Closed form of the integral of z**-expo over [x_lo, x_hi].

    Uses the log branch at expo == 1 and an expm1 form near 1 to avoid
    cancellation; vectorized over bin edges.
    """
    x_lo = np.asarray(x_lo, dtype=float)
    x_hi = np.asarray(x_hi, dtype=float)
    log_r = np.log(x_hi / x_lo)
    if expo == 1.0:
        return log_r
    t = (1.0 - expo) * log_r
    return x_lo ** (1.0 - expo) * np.expm1(t) / (1.0 - expo)


def bin_mass_mixed(intensity, x_k, x_k1):
    """g(x_k) times the closed-form power integral over [x_k, x_k1]."""
    dec = intensity.decomposition
    if dec is None:
        raise MissingDecompositionError(
            f"{intensity.name}: the mixed rule needs a decomposition"
        )
    if not x_k < x_k1:
        raise ParameterError(f"bin edges out of order: {x_k} >= {x_k1}")
    return float(dec.g(x_k)) * float(power_integral(x_k, x_k1, dec.kappa))


def bin_mass_trapezium(intensity, x_k, x_k1):
    """Trapezoid of nu over [x_k, x_k1]; endpoints must be evaluable."""
    if not x_k < x_k1:
        raise ParameterError(f"bin edges out of order: {x_k} >= {x_k1}")
    lo = intensity.evaluate(x_k)
    hi = intensity.evaluate(x_k1)
    return 0.5 * (lo + hi) * (x_k1 - x_k)


def _insert_threshold(points, x_thr):
    """Partition points with x_thr added when it falls strictly inside a bin."""
    if x_thr <= points[0] or x_thr >= points[-1]:
        return points
    i = np.searchsorted(points, x_thr)
    if points[i] == x_thr:
        return points
    return np.insert(points, i, x_thr)


def build_envelope(intensity, config: GridConfig, partition: Optional[Partition] = None):
    """Fill the bin-mass table for the configured method.

    The partition is built on demand.  Tail-section masses come from the
    partition's tail model; everything below uses the configured rule.
    """
    if partition is None:
        partition = _grid.build_partition(intensity, config)
    method = config.method

    n_geo = partition.n_geometric
    geo_pts = partition.points[:n_geo]
    tail_pts = partition.points[n_geo:]
    knots_geo = _insert_threshold(geo_pts, config.x_thr)
    points = np.concatenate([knots_geo, tail_pts])

    n_bins = len(points) - 1
    masses = np.empty(n_bins)
    kind = np.full(n_bins, _KIND_LINEAR, dtype=np.uint8)
    coef = np.full(n_bins, np.nan)
    expo = np.full(n_bins, np.nan)
    nu_knots = np.full(len(points), np.nan)

    n_geo_bins = len(knots_geo) - 1
    left = knots_geo[:-1]
    right = knots_geo[1:]
    below = left < config.x_thr

    # nu is needed at every knot from the first trapezium bin onwards
    first_lin = int(np.argmax(~below)) if not below.all() else n_geo_bins
    eval_from = max(first_lin, 0)
    if eval_from < len(knots_geo):
        vals = np.asarray(intensity.evaluate(knots_geo[eval_from:]), dtype=float)
        nu_knots[eval_from : len(knots_geo)] = vals

    if below.any():
        if method == METHOD_MIXED:
            dec = intensity.decomposition
            if dec is None:
                raise MissingDecompositionError(
                    f"{intensity.name}: the mixed rule needs a decomposition"
                )
            p_lo = dec.kappa
            coef_lo = np.asarray(dec.g(left[below]), dtype=float)
        else:
            # local exponent from the two leftmost trapezium masses
            m0 = bin_mass_trapezium(intensity, left[0], right[0])
            m1 = bin_mass_trapezium(intensity, left[1], right[1])
            p_lo = _grid.estimate_p(m1 / m0, right[0] / left[0])
            coef_lo = np.asarray(
                intensity.evaluate(left[below]), dtype=float
            ) * left[below] ** p_lo
        masses_lo = coef_lo * power_integral(left[below], right[below], p_lo)
        masses[:n_geo_bins][below] = masses_lo
        kind[:n_geo_bins][below] = _KIND_POWER
        coef[:n_geo_bins][below] = coef_lo
        expo[:n_geo_bins][below] = p_lo

    if (~below).any():
        # trapezoid over the linear bins, vectorized from the knot values
        li = np.nonzero(~below)[0]
        masses[li] = 0.5 * (nu_knots[li] + nu_knots[li + 1]) * (right[~below] - left[~below])

    # tail section: model-driven masses, nu recorded for the interpolant view
    if len(tail_pts):
        masses[n_geo_bins:] = partition.tail_bin_masses
        nu_tail = np.asarray(intensity.evaluate(tail_pts), dtype=float)
        nu_knots[len(knots_geo):] = nu_tail

    if np.any(masses < 0) or not np.all(np.isfinite(masses)):
        raise DomainError("bin masses must be finite and non-negative")

    cum = _kernels.cum_tail(masses)
    return Envelope(
        partition=partition,
        method=method,
        x_thr=config.x_thr,
        points=points,
        bin_masses=masses,
        cum_tail=cum,
        bin_kind=kind,
        bin_coef=coef,
        bin_expo=expo,
        nu_knots=nu_knots,
    )


def approx_intensity_many(envelope, x):
    """Vectorized piecewise approximation nu-tilde."""
    xs = np.asarray(x, dtype=float)
    pts = envelope.points
    if np.any(xs < pts[0]) or np.any(xs > pts[-1]):
        raise DomainError(
            f"approximate intensity defined on [{pts[0]:g}, {pts[-1]:g}]"
        )
    i = np.clip(np.searchsorted(pts, xs, side="right") - 1, 0, len(pts) - 2)
    out = np.empty(xs.shape)
    power = envelope.bin_kind[i] == _KIND_POWER
    if power.any():
        ii = i[power]
        out[power] = envelope.bin_coef[ii] * xs[power] ** -envelope.bin_expo[ii]
    lin = ~power
    if lin.any():
        ii = i[lin]
        x0, x1 = pts[ii], pts[ii + 1]
        v0, v1 = envelope.nu_knots[ii], envelope.nu_knots[ii + 1]
        out[lin] = v1 + (v0 - v1) * (x1 - xs[lin]) / (x1 - x0)
    return out


def approx_intensity(envelope, x):
    """Scalar convenience wrapper around :func:`approx_intensity_many`."""
    return float(approx_intensity_many(envelope, np.asarray([x]))[0])


def interp_tail_mass(envelope, x):
    """Tabulated tail mass eta-tilde at arbitrary x (linear between knots)."""
    xs = np.atleast_1d(np.asarray(x, dtype=float))
    out = _kernels.tail_mass_at(envelope.points, envelope.cum_tail, xs)
    return out if np.ndim(x) else float(out[0])


def _extend_envelope(envelope, new_pts, new_masses, p):
    """Rebuild the envelope records after prepending extension bins."""
    n = len(new_pts)
    pts = np.concatenate([new_pts, envelope.points])
    masses = np.concatenate([new_masses, envelope.bin_masses])
    x0 = envelope.points[0]
    coef_val = new_masses[-1] / float(power_integral(new_pts[-1], x0, p))
    kind = np.concatenate(
        [np.full(n, _KIND_POWER, dtype=np.uint8), envelope.bin_kind]
    )
    coef = np.concatenate([np.full(n, coef_val), envelope.bin_coef])
    expo = np.concatenate([np.full(n, p), envelope.bin_expo])
    nu_knots = np.concatenate([np.full(n, np.nan), envelope.nu_knots])
    cum = _kernels.cum_tail(masses)
    partition = replace(
        envelope.partition,
        points=np.concatenate([new_pts, envelope.partition.points]),
        n_geometric=envelope.partition.n_geometric + n,
    )
    return replace(
        envelope,
        partition=partition,
        points=pts,
        bin_masses=masses,
        cum_tail=cum,
        bin_kind=kind,
        bin_coef=coef,
        bin_expo=expo,
        nu_knots=nu_knots,
    )


def extend_envelope_lower(envelope, E_max):
    """Envelope covering at least mass E_max (adaptive lower extension)."""
    if E_max <= envelope.total_mass:
        return envelope
    new_pts, new_masses, p = _grid.plan_lower_extension(
        envelope.x_lower, envelope.partition.c, envelope.bin_masses, E_max=E_max
    )
    return _extend_envelope(envelope, new_pts, new_masses, p)


def extend_envelope_to(envelope, x_target):
    """Envelope whose table reaches down to at least x_target."""
    if x_target >= envelope.x_lower:
        return envelope
    c = envelope.partition.c
    n = max(1, int(math.ceil(math.log(envelope.x_lower / x_target) / math.log(c))))
    new_pts, new_masses, p = _grid.plan_lower_extension(
        envelope.x_lower, c, envelope.bin_masses, n=n
    )
    return _extend_envelope(envelope, new_pts, new_masses, p)
