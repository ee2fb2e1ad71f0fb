"""Precision, rejection-mass and speed diagnostics.

Three views of the approximation quality:

* paired per-jump relative errors against the exact sampler (shared arrival
  streams, so jump k is compared with jump k);
* the signed mass between the approximate and true intensity, i.e. the mean
  number of points a thinning sampler would have to reject (positive part)
  and the locally under-enveloped mass (negative part);
* wall-clock comparisons against the exact sampler, with and without
  per-trial table construction.
"""

from __future__ import annotations

import csv
import io
import json
import time
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from . import quadrature as _quad
from . import reference as _ref
from . import sampler as _sampler
from ._rng import normalize_rng, split_streams
from .errors import ParameterError
from .grid import GridConfig

__all__ = [
    "PrecisionReport",
    "RejectionMassReport",
    "BenchReport",
    "paired_errors_for_arrivals",
    "precision_report",
    "rejection_mass",
    "x_thr_sweep",
    "speed_benchmark",
]


def _rows_to_csv(fieldnames, rows):
    buf = io.StringIO()
    writer = csv.DictWriter(buf, fieldnames=fieldnames)
    writer.writeheader()
    for row in rows:
        writer.writerow(row)
    return buf.getvalue()


@dataclass(frozen=True)
class PrecisionReport:
    """Paired jumps and their relative errors |J~ - J| / J."""

    jump_exact: np.ndarray
    jump_approx: np.ndarray
    rel_err: np.ndarray

    def __len__(self):
        return len(self.rel_err)

    def quantiles(self, qs=(0.5, 0.9, 0.99)):
        return {q: float(np.quantile(self.rel_err, q)) for q in qs}

    @property
    def median(self) -> float:
        return float(np.median(self.rel_err))

    def rows(self):
        return [
            {"jump_exact": je, "jump_approx": ja, "rel_err": re}
            for je, ja, re in zip(self.jump_exact, self.jump_approx, self.rel_err)
        ]

    def to_csv(self) -> str:
        return _rows_to_csv(["jump_exact", "jump_approx", "rel_err"], self.rows())

    def to_json(self) -> str:
        return json.dumps(self.rows())


def paired_errors_for_arrivals(intensity, config, arrivals, settings=None):
    """Per-arrival paired errors for an explicit arrival stream."""
    settings = settings or _ref.DEFAULT_SETTINGS
    arrivals = np.sort(np.asarray(arrivals, dtype=float))
    envelope = _quad.build_envelope(intensity, config)
    if arrivals.size and arrivals[-1] > envelope.total_mass:
        envelope = _quad.extend_envelope_lower(envelope, float(arrivals[-1]))
    approx = _sampler.invert_tail_many(envelope, arrivals)
    exact = np.empty_like(approx)
    hint = None
    for k, e in enumerate(arrivals):
        exact[k] = _ref.exact_invert(intensity, float(e), settings, upper_hint=hint)
        hint = exact[k]
    rel = np.abs(approx - exact) / exact
    return PrecisionReport(jump_exact=exact, jump_approx=approx, rel_err=rel)


def precision_report(intensity, config, rng_seed, budget, settings=None):
    """Paired per-jump errors on a shared unit Poisson arrival stream."""
    arrival_rng, _ = split_streams(normalize_rng(rng_seed))
    if budget.n_jumps is None:
        raise ParameterError("precision reports need an n_jumps budget")
    arrivals = _sampler.poisson_arrivals(arrival_rng, budget)
    return paired_errors_for_arrivals(intensity, config, arrivals, settings)


@dataclass(frozen=True)
class RejectionMassReport:
    """Signed approximation mass: integral of (nu~ - nu) split by sign."""

    positive_mass: float
    negative_mass: float
    bins: int
    method: str
    x_thr: float
    scenario: str = ""

    def rows(self):
        return [
            {
                "scenario": self.scenario,
                "bins": self.bins,
                "x_thr": self.x_thr,
                "pos_mass": self.positive_mass,
                "neg_mass": self.negative_mass,
            }
        ]


_GL_NODES, _GL_WEIGHTS = np.polynomial.legendre.leggauss(24)


def _segment_integrals(envelope, intensity, lo, hi):
    """Gauss-Legendre integrals of max(d,0) and max(-d,0), d = nu~ - nu.

    Vectorized over all segments at once; segments where d changes sign are
    split at the (single, bracketed) crossing so the kink never sits inside
    a panel.
    """
    mid = 0.5 * (lo + hi)
    half = 0.5 * (hi - lo)
    xs = mid[:, None] + half[:, None] * _GL_NODES[None, :]
    flat = xs.ravel()
    d = _quad.approx_intensity_many(envelope, flat) - intensity.fn(flat)
    d = d.reshape(xs.shape)
    w = half[:, None] * _GL_WEIGHTS[None, :]
    pos = np.sum(np.where(d > 0, d, 0.0) * w, axis=1)
    neg = np.sum(np.where(d < 0, -d, 0.0) * w, axis=1)
    mixed = np.logical_and(np.any(d > 0, axis=1), np.any(d < 0, axis=1))
    for i in np.nonzero(mixed)[0]:
        a, b = lo[i], hi[i]
        fa = _quad.approx_intensity(envelope, a) - float(intensity.fn(a))
        for _ in range(60):
            m = 0.5 * (a + b)
            fm = _quad.approx_intensity(envelope, m) - float(intensity.fn(m))
            if (fa > 0) == (fm > 0):
                a, fa = m, fm
            else:
                b = m
        cut = 0.5 * (a + b)
        seg_lo = np.array([lo[i], cut])
        seg_hi = np.array([cut, hi[i]])
        sp, sn = _segment_integrals(envelope, intensity, seg_lo, seg_hi)
        pos[i], neg[i] = sp.sum(), sn.sum()
    return pos, neg


def rejection_mass(intensity, envelope, scenario=""):
    """Integrate |nu~ - nu| over the table, split by sign.

    The positive part is the Poisson mean of points a thinning sampler would
    reject; the negative part records where the approximation locally dips
    below nu (possible in the power-rule region when g is increasing).
    """
    pts = envelope.points
    lo, hi = pts[:-1].copy(), pts[1:].copy()
    # the last knot may sit on a domain boundary where nu diverges; Gauss
    # nodes are interior so no special casing is needed
    pos, neg = _segment_integrals(envelope, intensity, lo, hi)
    return RejectionMassReport(
        positive_mass=float(pos.sum()),
        negative_mass=float(neg.sum()),
        bins=len(envelope.bin_masses),
        method=envelope.method,
        x_thr=envelope.x_thr,
        scenario=scenario,
    )


def x_thr_sweep(intensity, bin_counts, thr_values, config=None, scenario=""):
    """RejectionMassReport grid over bin counts and thresholds."""
    base = config or GridConfig()
    reports = []
    for bins in bin_counts:
        for thr in thr_values:
            cfg = GridConfig(
                x_lower=base.x_lower,
                n_points=bins,
                eps_tail=base.eps_tail,
                x_thr=thr,
                tail_search_tol=base.tail_search_tol,
                method=base.method,
            )
            env = _quad.build_envelope(intensity, cfg)
            reports.append(rejection_mass(intensity, env, scenario=scenario))
    return reports


def reports_to_csv(reports: Sequence[RejectionMassReport]) -> str:
    rows = [r.rows()[0] for r in reports]
    return _rows_to_csv(["scenario", "bins", "x_thr", "pos_mass", "neg_mass"], rows)


@dataclass(frozen=True)
class BenchReport:
    """Per-scenario timings (seconds) and reference/approx speed ratios."""

    scenarios: list = field(default_factory=list)

    def add(self, scenario, build_s, approx_s, reference_s):
        self.scenarios.append(
            {
                "scenario": scenario,
                "build_s": build_s,
                "approx_s": approx_s,
                "reference_s": reference_s,
                "ratio": reference_s / (build_s + approx_s),
                "ratio_reuse": reference_s / approx_s,
            }
        )

    def rows(self):
        return list(self.scenarios)

    def to_csv(self) -> str:
        return _rows_to_csv(
            ["scenario", "build_s", "approx_s", "reference_s", "ratio", "ratio_reuse"],
            self.rows(),
        )

    def to_json(self) -> str:
        return json.dumps(self.rows())


def _median_time(fn, replicates, warmup=1):
    for _ in range(warmup):
        fn()
    times = []
    for _ in range(replicates):
        t0 = time.perf_counter()
        fn()
        times.append(time.perf_counter() - t0)
    return float(np.median(times))


def speed_benchmark(
    intensity,
    config,
    budget,
    replicates=3,
    settings=None,
    scenario="",
    seed=0,
    reference_replicates=None,
    report: Optional[BenchReport] = None,
):
    """Median wall-clock comparison against the exact sampler.

    The approximate side is timed both for the envelope build and for draws
    from a prebuilt envelope; the reference side runs the full exact sampler
    per trial.  ``reference_replicates`` can be lowered separately because
    one exact trial is typically 1000x the approximate trial.
    """
    settings = settings or _ref.DEFAULT_SETTINGS
    report = report if report is not None else BenchReport()

    build_s = _median_time(
        lambda: _quad.build_envelope(intensity, config), replicates
    )
    envelope = _quad.build_envelope(intensity, config)
    counter = iter(range(10_000_000))

    def draw():
        _sampler.resample(envelope, seed + next(counter), budget)

    approx_s = _median_time(draw, replicates)

    ref_reps = reference_replicates or replicates

    def ref_draw():
        _ref.ferguson_klass_sample(intensity, seed, budget, settings)

    ref_s = _median_time(ref_draw, ref_reps, warmup=0)
    report.add(scenario or intensity.name, build_s, approx_s, ref_s)
    return report
