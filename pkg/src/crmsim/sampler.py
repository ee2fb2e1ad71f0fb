"""Grid-based CRM sampling.

The expensive part (building the tail-mass table) happens once; each draw
then maps unit Poisson arrival times through the tabulated inverse by binary
search and linear interpolation.  Arrivals beyond the tabulated mass trigger
an adaptive lower extension before inversion, so jumps stay exact inverses
of the table.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np

from . import quadrature as _quad
from . import _kernels
from ._rng import normalize_rng, split_streams
from .errors import MassExhaustedError, ParameterError
from .grid import GridConfig

__all__ = [
    "CrmSample",
    "SamplerBudget",
    "poisson_arrivals",
    "invert_tail",
    "invert_tail_many",
    "sample",
    "resample",
]


@dataclass(frozen=True)
class CrmSample:
    """Jumps in non-increasing order with their arrivals and locations."""

    jumps: np.ndarray
    arrivals: np.ndarray
    locations: np.ndarray

    def __len__(self):
        return len(self.jumps)

    @property
    def total_mass(self) -> float:
        return float(self.jumps.sum())


@dataclass(frozen=True)
class SamplerBudget:
    """Truncation rule: either a fixed jump count or a smallest jump size."""

    n_jumps: Optional[int] = None
    min_jump: Optional[float] = None

    def __post_init__(self):
        if (self.n_jumps is None) == (self.min_jump is None):
            raise ParameterError("set exactly one of n_jumps / min_jump")
        if self.n_jumps is not None and self.n_jumps < 0:
            raise ParameterError(f"n_jumps must be >= 0, got {self.n_jumps}")
        if self.min_jump is not None and not self.min_jump > 0:
            raise ParameterError(f"min_jump must be > 0, got {self.min_jump}")

    @classmethod
    def jumps(cls, n: int) -> "SamplerBudget":
        return cls(n_jumps=n)

    @classmethod
    def threshold(cls, min_jump: float) -> "SamplerBudget":
        return cls(min_jump=min_jump)


def poisson_arrivals(rng, budget, mass_cutoff=None):
    """Arrival times E_k of a unit Poisson process under the budget.

    With an ``n_jumps`` budget exactly that many arrivals are returned.  With
    a ``min_jump`` budget, arrivals accumulate until they pass
    ``mass_cutoff`` (the tail mass at the smallest admissible jump) and the
    overshooting arrival is dropped.
    """
    if budget.n_jumps is not None:
        n = budget.n_jumps
        if n == 0:
            return np.empty(0)
        return np.cumsum(rng.exponential(1.0, size=n))
    if mass_cutoff is None:
        raise ParameterError("min_jump budgets need the tail mass cutoff")
    chunks = []
    total = 0.0
    block = 64
    while True:
        e = rng.exponential(1.0, size=block)
        cum = total + np.cumsum(e)
        over = np.nonzero(cum > mass_cutoff)[0]
        if len(over):
            chunks.append(cum[: over[0]])
            break
        chunks.append(cum)
        total = float(cum[-1])
        block = min(block * 2, 65536)
    return np.concatenate(chunks) if chunks else np.empty(0)


def invert_tail_many(envelope, arrivals):
    """Map arrivals through the tabulated inverse tail mass.

    All arrivals must lie within the tabulated mass; callers extend the
    envelope first (see :func:`sample`).
    """
    arrivals = np.asarray(arrivals, dtype=float)
    if arrivals.size and arrivals.max() > envelope.total_mass:
        raise MassExhaustedError(
            f"arrival {arrivals.max():g} beyond tabulated mass "
            f"{envelope.total_mass:g}; extend the envelope first"
        )
    return _kernels.invert_many(envelope.points, envelope.cum_tail, arrivals)


def invert_tail(envelope, e, intensity=None):
    """Single-arrival inversion; extends the table first if e overshoots it.

    The extension is discarded afterwards (the envelope is immutable); batch
    callers should extend once via the sample flow instead.
    """
    if e > envelope.total_mass:
        envelope = _quad.extend_envelope_lower(envelope, float(e))
    return float(
        _kernels.invert_many(envelope.points, envelope.cum_tail, np.asarray([e]))[0]
    )


def _draw(envelope, arrival_rng, location_rng, budget):
    if budget.min_jump is not None:
        cutoff = _quad.interp_tail_mass(envelope, max(budget.min_jump, envelope.x_lower))
        if budget.min_jump > envelope.x_upper:
            cutoff = 0.0
        arrivals = poisson_arrivals(arrival_rng, budget, mass_cutoff=cutoff)
    else:
        arrivals = poisson_arrivals(arrival_rng, budget)
        if arrivals.size and arrivals[-1] > envelope.total_mass:
            envelope = _quad.extend_envelope_lower(envelope, float(arrivals[-1]))
    jumps = invert_tail_many(envelope, arrivals)
    locations = location_rng.random(len(jumps))
    return CrmSample(jumps=jumps, arrivals=arrivals, locations=locations), envelope


def sample(intensity, config: GridConfig, rng, budget) -> CrmSample:
    """Build the envelope for ``intensity`` and draw one realization.

    The envelope is built once per call; use :func:`resample` to reuse it.
    Locations are i.i.d. uniform on [0, 1] from a stream independent of the
    arrivals, so the same seed pairs arrival-for-arrival with the exact
    reference sampler.
    """
    envelope = _quad.build_envelope(intensity, config)
    return resample(envelope, rng, budget)


def resample(envelope, rng, budget) -> CrmSample:
    """Draw one realization from a pre-built envelope."""
    arrival_rng, location_rng = split_streams(normalize_rng(rng))
    if budget.min_jump is not None and budget.min_jump < envelope.x_lower:
        envelope = _quad.extend_envelope_to(envelope, budget.min_jump)
    out, _ = _draw(envelope, arrival_rng, location_rng, budget)
    return out
