"""Seed handling shared by the approximate and reference samplers.

Both samplers split one root generator into an arrival stream and a location
stream.  Passing the same seed to both therefore yields identical unit
Poisson arrivals, which is what makes paired jump-error diagnostics possible.
It also keeps locations unaffected by how many arrivals a budget consumes.
"""

import numpy as np

RngLike = "np.random.Generator | np.random.SeedSequence | int | None"


def normalize_rng(rng) -> np.random.Generator:
    """Coerce seeds, seed sequences or generators into a Generator."""
    if isinstance(rng, np.random.Generator):
        return rng
    return np.random.default_rng(rng)


def split_streams(rng, n=2):
    """Spawn ``n`` independent child generators from ``rng``.

    The children depend only on the state of ``rng`` when called, so two
    samplers seeded identically see identical child streams.
    """
    return normalize_rng(rng).spawn(n)
