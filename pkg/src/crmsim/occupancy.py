"""Non-conjugate occupancy model over a beta-process species prior.

Species i exists at a site with probability theta_i and, where present, is
detected on each of K occasions with probability q_i.  Marginalizing the
latent presence indicator gives the site likelihood

    theta * q**s * (1-q)**(K-s) + (1-theta) * [s == 0]

The posterior splits into fixed atoms for the discovered species (a
normalized bivariate density per species) and a Levy process for the
undiscovered ones whose intensity is the prior tilted by the all-zero
likelihood:

    p(q) f(theta) [theta (1-q)**K + (1-theta)]**n

The theta dimension uses the geometric grid machinery (the q-marginalized
tilted intensity goes through the ordinary envelope/inversion path); the q
dimension uses a uniform grid sampled by the strip method.
"""

from __future__ import annotations

import csv
import io
import json
import math
from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence

import numpy as np
from scipy import integrate

from . import quadrature as _quad
from . import sampler as _sampler
from ._rng import normalize_rng, split_streams
from .errors import DegenerateDensityError, ParameterError
from .grid import GridConfig
from .intensity import UNIT_INTERVAL, Decomposition, LevyIntensity, beta_process, make_custom

__all__ = [
    "OccupancyData",
    "OccupancyPrior",
    "OccupancyPosterior",
    "FixedPointGrid",
    "UndiscoveredSample",
    "PredictiveDistribution",
    "site_likelihood",
    "species_likelihood",
    "brute_force_species_likelihood",
    "tilted_intensity",
    "tilted_theta_intensity",
    "fixed_point_posterior",
    "fit_posterior",
    "sample_undiscovered",
    "predictive_counts",
    "run_predictive",
    "synthetic_occupancy",
]


@dataclass(frozen=True)
class OccupancyData:
    """Detection array Y[species, site, occasion] in {0, 1}."""

    Y: np.ndarray

    def __post_init__(self):
        Y = np.asarray(self.Y)
        if Y.ndim != 3:
            raise ParameterError("Y must be (species, site, occasion)")
        if not np.isin(Y, (0, 1)).all():
            raise ParameterError("Y must be binary")
        object.__setattr__(self, "Y", Y.astype(np.int64))

    @property
    def n_species(self) -> int:
        return self.Y.shape[0]

    @property
    def n_sites(self) -> int:
        return self.Y.shape[1]

    @property
    def n_occasions(self) -> int:
        return self.Y.shape[2]

    @property
    def site_counts(self) -> np.ndarray:
        """s[i, j] = detections of species i at site j."""
        return self.Y.sum(axis=2)

    @property
    def empty_site(self) -> np.ndarray:
        """I[i, j] = 1 when species i was never seen at site j."""
        return (self.site_counts == 0).astype(np.int64)

    @property
    def discovered(self) -> np.ndarray:
        return self.site_counts.sum(axis=1) > 0

    @property
    def p_star(self) -> int:
        return int(self.discovered.sum())

    def to_csv(self) -> str:
        buf = io.StringIO()
        writer = csv.writer(buf)
        writer.writerow(["species", "site", "occasion", "detected"])
        p, n, K = self.Y.shape
        for i in range(p):
            for j in range(n):
                for k in range(K):
                    writer.writerow([i, j, k, int(self.Y[i, j, k])])
        return buf.getvalue()

    @classmethod
    def from_csv(cls, text: str) -> "OccupancyData":
        reader = csv.DictReader(io.StringIO(text))
        rows = [
            (int(r["species"]), int(r["site"]), int(r["occasion"]), int(r["detected"]))
            for r in reader
        ]
        if not rows:
            raise ParameterError("empty occupancy CSV")
        p = max(r[0] for r in rows) + 1
        n = max(r[1] for r in rows) + 1
        K = max(r[2] for r in rows) + 1
        Y = np.zeros((p, n, K), dtype=np.int64)
        for i, j, k, d in rows:
            Y[i, j, k] = d
        return cls(Y)


def _uniform_q_density(q):
    return np.ones_like(np.asarray(q, dtype=float))


@dataclass(frozen=True)
class OccupancyPrior:
    """Beta-process prior on theta plus a parametric prior density on q."""

    theta_process: LevyIntensity
    q_prior_density: Callable = _uniform_q_density

    def __post_init__(self):
        total, _ = integrate.quad(
            lambda q: float(self.q_prior_density(q)), 0.0, 1.0, limit=200
        )
        if abs(total - 1.0) > 1e-9:
            raise ParameterError(
                f"q prior density integrates to {total:.12f}, not 1"
            )

    @classmethod
    def beta(cls, m, c, q_prior_density=None) -> "OccupancyPrior":
        return cls(
            theta_process=beta_process(m, c),
            q_prior_density=q_prior_density or _uniform_q_density,
        )


def site_likelihood(theta, q, s, K):
    """Marginal probability of s detections in K occasions at one site."""
    theta = np.asarray(theta, dtype=float)
    q = np.asarray(q, dtype=float)
    s = np.asarray(s)
    occupied = theta * q**s * (1.0 - q) ** (K - s)
    absent = (1.0 - theta) * (s == 0)
    return occupied + absent


def species_likelihood(theta, q, site_counts, K):
    """Product of site likelihoods for one species (broadcast over theta, q)."""
    out = np.ones(np.broadcast(np.asarray(theta, dtype=float), np.asarray(q, dtype=float)).shape)
    for s in np.asarray(site_counts).ravel():
        out = out * site_likelihood(theta, q, int(s), K)
    return out


def brute_force_species_likelihood(theta, q, Y_i, K):
    """Likelihood by explicit enumeration of the latent presence vector.

    Exponential in the number of sites; the oracle for the marginalized
    product formula.
    """
    Y_i = np.asarray(Y_i)
    n = Y_i.shape[0]
    total = 0.0
    for mask in range(1 << n):
        prob = 1.0
        for j in range(n):
            s_j = int(Y_i[j].sum())
            if (mask >> j) & 1:
                prob *= theta * q**s_j * (1.0 - q) ** (K - s_j)
            else:
                prob *= (1.0 - theta) * (1.0 if s_j == 0 else 0.0)
            if prob == 0.0:
                break
        total += prob
    return total


def _log_bracket(theta, q, K):
    """log(theta (1-q)**K + (1-theta)), stable for theta, q in (0, 1)."""
    theta = np.asarray(theta, dtype=float)
    q = np.asarray(q, dtype=float)
    return np.log1p(theta * ((1.0 - q) ** K - 1.0))


def tilted_intensity(prior, theta, q, n, K):
    """Prior intensity times the probability of total non-observation."""
    dens = np.asarray(prior.q_prior_density(q), dtype=float)
    f = np.asarray(prior.theta_process.fn(np.asarray(theta, dtype=float)))
    return dens * f * np.exp(n * _log_bracket(theta, q, K))


def _q_marginal_factor(prior, thetas, q_mids, dq, n, K):
    """S(theta) = integral over q of p(q) bracket**n, via the uniform grid."""
    th = np.asarray(thetas, dtype=float)
    lb = _log_bracket(th[:, None], q_mids[None, :], K)
    w = np.asarray(prior.q_prior_density(q_mids), dtype=float) * dq
    return np.exp(n * lb) @ w


def tilted_theta_intensity(prior, data_n, K, q_mids, dq) -> LevyIntensity:
    """The q-marginalized tilted intensity as an ordinary Levy intensity."""
    base = prior.theta_process

    def fn(theta):
        theta = np.asarray(theta, dtype=float)
        return base.fn(theta) * _q_marginal_factor(prior, theta, q_mids, dq, data_n, K)

    dec = None
    if base.decomposition is not None:
        kappa = base.decomposition.kappa
        g_base = base.decomposition.g

        def g(theta):
            theta = np.asarray(theta, dtype=float)
            return np.asarray(g_base(theta)) * _q_marginal_factor(
                prior, theta, q_mids, dq, data_n, K
            )

        dec = Decomposition(kappa, g)
    return make_custom(fn, UNIT_INTERVAL, decomposition=dec, name="tilted-theta")


@dataclass(frozen=True)
class FixedPointGrid:
    """Normalized bivariate posterior masses for one discovered species."""

    species: int
    theta_edges: np.ndarray
    q_edges: np.ndarray
    masses: np.ndarray  # (n_theta_bins, n_q_cells), sums to 1

    @property
    def theta_mids(self) -> np.ndarray:
        return np.sqrt(self.theta_edges[:-1] * self.theta_edges[1:])

    @property
    def q_mids(self) -> np.ndarray:
        return 0.5 * (self.q_edges[:-1] + self.q_edges[1:])

    def theta_marginal_density(self) -> np.ndarray:
        widths = np.diff(self.theta_edges)
        return self.masses.sum(axis=1) / widths

    def theta_mode(self) -> float:
        return float(self.theta_mids[int(np.argmax(self.theta_marginal_density()))])

    def sample(self, rng, size):
        """Strip method: pick a cell by mass, then uniform within the cell."""
        rng = normalize_rng(rng)
        flat = self.masses.ravel()
        idx = rng.choice(flat.size, size=size, p=flat)
        ti, qi = np.unravel_index(idx, self.masses.shape)
        u1 = rng.random(size)
        u2 = rng.random(size)
        thetas = self.theta_edges[ti] + u1 * np.diff(self.theta_edges)[ti]
        qs = self.q_edges[qi] + u2 * np.diff(self.q_edges)[qi]
        return thetas, qs


def _log_f_theta(prior, thetas):
    vals = np.asarray(prior.theta_process.fn(thetas), dtype=float)
    with np.errstate(divide="ignore"):
        return np.log(vals)


def fixed_point_posterior(
    prior, data, species, config: Optional[GridConfig] = None, q_cells=200
) -> FixedPointGrid:
    """Posterior density of (theta, q) for one discovered species.

    Evaluated in log space on the bivariate grid (geometric theta cells,
    uniform q cells) at cell midpoints, then normalized by cell mass.
    """
    if not data.discovered[species]:
        raise ParameterError(f"species {species} was never detected")
    config = config or GridConfig()
    from . import grid as _grid

    theta_edges = _grid.geometric_points(config.x_lower, 1.0, config.n_points)
    q_edges = np.linspace(0.0, 1.0, q_cells + 1)
    t_mid = np.sqrt(theta_edges[:-1] * theta_edges[1:])
    q_mid = 0.5 * (q_edges[:-1] + q_edges[1:])

    K = data.n_occasions
    counts = data.site_counts[species]
    log_dens = _log_f_theta(prior, t_mid)[:, None] + np.log(
        np.asarray(prior.q_prior_density(q_mid), dtype=float)
    )[None, :]
    th = t_mid[:, None]
    qq = q_mid[None, :]
    with np.errstate(divide="ignore"):
        for s in counts:
            log_dens = log_dens + np.log(site_likelihood(th, qq, int(s), K))

    areas = np.diff(theta_edges)[:, None] * np.diff(q_edges)[None, :]
    shift = np.max(log_dens)
    if not np.isfinite(shift):
        raise DegenerateDensityError(
            f"species {species}: posterior density is zero on the whole grid "
            "(data inconsistent with the prior support)"
        )
    masses = np.exp(log_dens - shift) * areas
    masses /= masses.sum()
    return FixedPointGrid(
        species=species, theta_edges=theta_edges, q_edges=q_edges, masses=masses
    )


@dataclass(frozen=True)
class OccupancyPosterior:
    """Superposition of fixed atoms (discovered) and a tilted process."""

    prior: OccupancyPrior
    data: OccupancyData
    config: GridConfig
    q_edges: np.ndarray
    envelope: object  # tail-mass table of the q-marginalized tilted theta intensity
    undiscovered_cell_masses: np.ndarray  # (n_theta_bins, n_q_cells)
    cond_cdf: np.ndarray  # per theta-bin CDF of q | theta
    fixed_point_grids: list = field(default_factory=list)

    @property
    def q_mids(self) -> np.ndarray:
        return 0.5 * (self.q_edges[:-1] + self.q_edges[1:])

    @property
    def theta_points(self) -> np.ndarray:
        return self.envelope.points


def fit_posterior(
    prior, data, config: Optional[GridConfig] = None, q_cells=200
) -> OccupancyPosterior:
    """Build every grid the posterior needs (done once per dataset)."""
    config = config or GridConfig()
    q_edges = np.linspace(0.0, 1.0, q_cells + 1)
    q_mid = 0.5 * (q_edges[:-1] + q_edges[1:])
    dq = 1.0 / q_cells
    K = data.n_occasions
    n = data.n_sites

    theta_int = tilted_theta_intensity(prior, n, K, q_mid, dq)
    envelope = _quad.build_envelope(theta_int, config)

    pts = envelope.points
    t_mid = np.sqrt(pts[:-1] * pts[1:])
    lb = _log_bracket(t_mid[:, None], q_mid[None, :], K)
    w = np.asarray(prior.q_prior_density(q_mid), dtype=float) * dq
    cond = np.exp(n * lb) * w[None, :]
    row_tot = cond.sum(axis=1, keepdims=True)
    cond = cond / row_tot
    cell_masses = envelope.bin_masses[:, None] * cond
    cond_cdf = np.cumsum(cond, axis=1)
    cond_cdf[:, -1] = 1.0

    grids = [
        fixed_point_posterior(prior, data, int(i), config, q_cells)
        for i in np.nonzero(data.discovered)[0]
    ]
    return OccupancyPosterior(
        prior=prior,
        data=data,
        config=config,
        q_edges=q_edges,
        envelope=envelope,
        undiscovered_cell_masses=cell_masses,
        cond_cdf=cond_cdf,
        fixed_point_grids=grids,
    )


@dataclass(frozen=True)
class UndiscoveredSample:
    """One realization of the undiscovered-species process."""

    thetas: np.ndarray  # jump sizes = presence probabilities
    qs: np.ndarray
    arrivals: np.ndarray

    def __len__(self):
        return len(self.thetas)


def sample_undiscovered(posterior, rng, budget) -> UndiscoveredSample:
    """Theta jumps by grid inversion, q by the strip method on q | theta."""
    rng = normalize_rng(rng)
    theta_rng, q_rng = split_streams(rng)
    crm = _sampler.resample(posterior.envelope, theta_rng, budget)
    thetas = crm.jumps
    pts = posterior.envelope.points
    rows = np.clip(np.searchsorted(pts, thetas, side="right") - 1, 0, len(pts) - 2)
    u_cell = q_rng.random(len(thetas))
    u_in = q_rng.random(len(thetas))
    cols = np.empty(len(thetas), dtype=np.int64)
    for k, (row, u) in enumerate(zip(rows, u_cell)):
        cols[k] = np.searchsorted(posterior.cond_cdf[row], u, side="right")
    cols = np.clip(cols, 0, posterior.cond_cdf.shape[1] - 1)
    dq = posterior.q_edges[1] - posterior.q_edges[0]
    qs = posterior.q_edges[cols] + u_in * dq
    return UndiscoveredSample(thetas=thetas, qs=qs, arrivals=crm.arrivals)


@dataclass(frozen=True)
class PredictiveDistribution:
    """Distribution of a species count on 0..cap (probabilities sum to 1)."""

    probs: np.ndarray

    @property
    def support(self) -> np.ndarray:
        return np.arange(len(self.probs))

    @property
    def cap(self) -> int:
        return len(self.probs) - 1

    def mean(self) -> float:
        return float(np.dot(self.support, self.probs))

    def rows(self):
        return [{"count": int(k), "prob": float(p)} for k, p in zip(self.support, self.probs)]

    def to_csv(self) -> str:
        buf = io.StringIO()
        writer = csv.writer(buf)
        writer.writerow(["count", "prob"])
        for row in self.rows():
            writer.writerow([row["count"], row["prob"]])
        return buf.getvalue()

    def to_json(self) -> str:
        return json.dumps(self.rows())

    @classmethod
    def from_counts(cls, counts, cap) -> "PredictiveDistribution":
        counts = np.asarray(counts, dtype=np.int64)
        clipped = np.minimum(counts, cap)
        probs = np.bincount(clipped, minlength=cap + 1).astype(float)
        probs /= probs.sum()
        return cls(probs=probs)


def predictive_counts(
    samples: Sequence[UndiscoveredSample], K_sub, n_sites, r=None, rng=None, cap=50
) -> PredictiveDistribution:
    """Monte Carlo distribution of newly observed species counts.

    For each posterior draw, every feature (theta, q) occupies each site
    independently with probability theta and is detected Binomial(K_sub, q)
    times where present.  A species counts when it has >= 1 detection in
    total, or exactly r detections when ``r`` is given.
    """
    if cap < 1:
        raise ParameterError("cap must be >= 1")
    rng = normalize_rng(rng)
    counts = np.empty(len(samples), dtype=np.int64)
    for rep, s in enumerate(samples):
        F = len(s)
        if F == 0:
            counts[rep] = 0
            continue
        present = rng.random((F, n_sites)) < s.thetas[:, None]
        p_detect = np.where(present, s.qs[:, None], 0.0)
        detections = rng.binomial(K_sub, p_detect).sum(axis=1)
        if r is None:
            counts[rep] = int((detections >= 1).sum())
        else:
            counts[rep] = int((detections == r).sum())
    return PredictiveDistribution.from_counts(counts, cap)


def run_predictive(
    posterior,
    K_sub,
    r=None,
    n_mc=10_000,
    cap=50,
    budget=None,
    rng=None,
) -> PredictiveDistribution:
    """End-to-end predictive: n_mc posterior draws, then the count histogram.

    The default jump budget keeps every feature with theta >= 1e-6; features
    below that have negligible chance of ever being detected at these scales.
    """
    budget = budget or _sampler.SamplerBudget.threshold(1e-6)
    root = normalize_rng(rng)
    draw_rng, mc_rng = split_streams(root)
    seeds = draw_rng.spawn(n_mc)
    samples = [sample_undiscovered(posterior, s, budget) for s in seeds]
    return predictive_counts(
        samples, K_sub, posterior.data.n_sites, r=r, rng=mc_rng, cap=cap
    )


def synthetic_occupancy(thetas, q, n_sites, K, rng, require_discovered=True):
    """Generate detection data from the occupancy model itself.

    With ``require_discovered`` each species is regenerated until it has at
    least one detection, matching the fixed-point analysis which conditions
    on discovery.
    """
    rng = normalize_rng(rng)
    rows = []
    for theta in np.atleast_1d(np.asarray(thetas, dtype=float)):
        for _ in range(10_000):
            present = rng.random(n_sites) < theta
            Y = (rng.random((n_sites, K)) < q) & present[:, None]
            if Y.any() or not require_discovered:
                break
        rows.append(Y.astype(np.int64))
    return OccupancyData(np.stack(rows, axis=0))
