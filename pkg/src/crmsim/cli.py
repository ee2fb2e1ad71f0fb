"""Command-line surface.

One subcommand per experiment family:

    sample             draw one CRM realization
    precision          paired jump errors vs the exact sampler
    reject-mass        signed approximation mass for one configuration
    thr-sweep          rejection mass over bins x threshold grids
    bench              speed comparison vs the exact sampler
    corm               compound-random-measure example (directing intensity)
    occupancy-fit      fit the occupancy posterior grids
    occupancy-predict  predictive distribution of new-species counts

All outputs are plot-ready CSV (default) or JSON.  Identical argv and seed
give byte-identical files.  Exit codes: 0 success, 2 usage error, 1
numerical failure.
"""

from __future__ import annotations

import argparse
import json
import sys

import numpy as np

from . import corm as _corm
from . import diagnostics as _diag
from . import occupancy as _occ
from . import quadrature as _quad
from .errors import CrmError
from .grid import GridConfig
from .intensity import (
    beta_process,
    gamma_process,
    generalized_gamma_process,
    sigma_stable_process,
    stable_beta_process,
)
from .sampler import SamplerBudget, sample

DEFAULT_SEED = 20177


def _build_process(args):
    name = args.process
    if name == "gamma":
        return gamma_process(args.M)
    if name == "sigma-stable":
        return sigma_stable_process(args.sigma)
    if name == "beta":
        return beta_process(args.M, args.c)
    if name == "gen-gamma":
        return generalized_gamma_process(args.M, args.sigma, args.a)
    if name == "stable-beta":
        return stable_beta_process(args.M, args.sigma, args.c)
    raise CrmError(f"unknown process {name!r}")


def _grid_config(args, bins=None):
    method = getattr(args, "method", "mixed")
    x_lower = getattr(args, "x_lower", None)
    if x_lower is None:
        x_lower = 1e-10 if method == "mixed" else 1e-5
    x_thr = getattr(args, "x_thr", None)
    if x_thr is None:
        x_thr = 1e-5 if method == "mixed" else x_lower
    return GridConfig(
        x_lower=x_lower,
        n_points=bins if bins is not None else args.bins,
        eps_tail=getattr(args, "eps_tail", 1e-10),
        x_thr=x_thr,
        method=method,
    )


def _budget(args):
    if getattr(args, "min_jump", None) is not None:
        return SamplerBudget.threshold(args.min_jump)
    return SamplerBudget.jumps(args.n_jumps)


def _emit(args, text):
    if args.out:
        with open(args.out, "w") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def _rows_out(args, fieldnames, rows):
    if args.format == "json":
        _emit(args, json.dumps(rows) + "\n")
    else:
        import csv as _csv
        import io as _io

        buf = _io.StringIO()
        writer = _csv.DictWriter(buf, fieldnames=fieldnames)
        writer.writeheader()
        for row in rows:
            writer.writerow(row)
        _emit(args, buf.getvalue())


def _add_process_flags(p, bins_default=1000):
    p.add_argument(
        "--process",
        required=True,
        choices=["gamma", "sigma-stable", "beta", "gen-gamma", "stable-beta"],
    )
    p.add_argument("--M", type=float, default=1.0)
    p.add_argument("--sigma", type=float, default=0.5)
    p.add_argument("--c", type=float, default=1.0)
    p.add_argument("--a", type=float, default=1.0)
    p.add_argument("--bins", type=int, default=bins_default)
    p.add_argument("--x-lower", dest="x_lower", type=float, default=None)
    p.add_argument("--x-thr", dest="x_thr", type=float, default=None)
    p.add_argument("--eps-tail", dest="eps_tail", type=float, default=1e-10)
    p.add_argument("--method", choices=["mixed", "trapezium"], default="mixed")


def _add_common(p):
    p.add_argument("--seed", type=int, default=DEFAULT_SEED)
    p.add_argument("--out", default=None)
    p.add_argument("--format", choices=["csv", "json"], default="csv")


def _parser():
    parser = argparse.ArgumentParser(prog="crmsim")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("sample", help="draw one CRM realization")
    _add_process_flags(p)
    p.add_argument("--n-jumps", dest="n_jumps", type=int, default=1000)
    p.add_argument("--min-jump", dest="min_jump", type=float, default=None)
    _add_common(p)

    p = sub.add_parser("precision", help="paired jump errors vs the exact sampler")
    _add_process_flags(p)
    p.add_argument("--bins-list", dest="bins_list", default=None,
                   help="comma-separated bin counts (overrides --bins)")
    p.add_argument("--n-jumps", dest="n_jumps", type=int, default=100)
    _add_common(p)

    p = sub.add_parser("reject-mass", help="signed approximation mass")
    _add_process_flags(p)
    _add_common(p)

    p = sub.add_parser("thr-sweep", help="rejection mass over bins x thresholds")
    _add_process_flags(p)
    p.add_argument("--bins-list", dest="bins_list", default="100,1000")
    p.add_argument("--thr-list", dest="thr_list", default="1e-5,1e-2")
    _add_common(p)

    p = sub.add_parser("bench", help="speed comparison vs the exact sampler")
    _add_process_flags(p)
    p.add_argument("--n-jumps", dest="n_jumps", type=int, default=1000)
    p.add_argument("--replicates", type=int, default=3)
    p.add_argument("--reference-replicates", dest="reference_replicates",
                   type=int, default=1)
    _add_common(p)

    p = sub.add_parser("corm", help="compound random measure example")
    p.add_argument("--M", type=float, default=1.0)
    p.add_argument("--c", type=float, default=2.0)
    p.add_argument("--xi", type=float, default=1.0)
    p.add_argument("--d", type=int, default=1)
    p.add_argument("--bins", type=int, default=1000)
    p.add_argument("--n-jumps", dest="n_jumps", type=int, default=1000)
    p.add_argument("--min-jump", dest="min_jump", type=float, default=None)
    p.add_argument("--verify", action="store_true",
                   help="print the max integral-equation residual instead")
    p.add_argument("--curve", action="store_true",
                   help="emit the directing intensity curve instead of a sample")
    _add_common(p)

    p = sub.add_parser("occupancy-fit", help="fit occupancy posterior grids")
    p.add_argument("--data", required=True, help="CSV: species,site,occasion,detected")
    p.add_argument("--synthetic", action="store_true",
                   help="write the built-in demo scenario to --data first")
    p.add_argument("--m", type=float, default=1.0)
    p.add_argument("--c", type=float, default=2.0)
    p.add_argument("--bins", type=int, default=1000)
    p.add_argument("--q-cells", dest="q_cells", type=int, default=200)
    _add_common(p)

    p = sub.add_parser("occupancy-predict", help="predictive new-species counts")
    p.add_argument("--data", required=True)
    p.add_argument("--m", type=float, default=1.0)
    p.add_argument("--c", type=float, default=2.0)
    p.add_argument("--bins", type=int, default=1000)
    p.add_argument("--q-cells", dest="q_cells", type=int, default=200)
    p.add_argument("--K-sub", dest="K_sub", type=int, required=True)
    p.add_argument("--r", type=int, default=None)
    p.add_argument("--n-mc", dest="n_mc", type=int, default=10_000)
    p.add_argument("--cap", type=int, default=50)
    _add_common(p)

    return parser


def _cmd_sample(args):
    intensity = _build_process(args)
    crm = sample(intensity, _grid_config(args), args.seed, _budget(args))
    rows = [
        {"jump": j, "arrival": e, "location": loc}
        for j, e, loc in zip(crm.jumps, crm.arrivals, crm.locations)
    ]
    _rows_out(args, ["jump", "arrival", "location"], rows)
    return 0


def _cmd_precision(args):
    intensity = _build_process(args)
    bins_list = (
        [int(b) for b in args.bins_list.split(",")] if args.bins_list else [args.bins]
    )
    rows = []
    for bins in bins_list:
        rep = _diag.precision_report(
            intensity, _grid_config(args, bins), args.seed,
            SamplerBudget.jumps(args.n_jumps),
        )
        qs = rep.quantiles((0.5, 0.9, 0.99))
        rows.append(
            {
                "bins": bins,
                "median_rel_err": qs[0.5],
                "q90_rel_err": qs[0.9],
                "q99_rel_err": qs[0.99],
            }
        )
    _rows_out(args, ["bins", "median_rel_err", "q90_rel_err", "q99_rel_err"], rows)
    return 0


def _cmd_reject_mass(args):
    intensity = _build_process(args)
    env = _quad.build_envelope(intensity, _grid_config(args))
    rep = _diag.rejection_mass(intensity, env, scenario=intensity.name)
    _rows_out(args, ["scenario", "bins", "x_thr", "pos_mass", "neg_mass"], rep.rows())
    return 0


def _cmd_thr_sweep(args):
    intensity = _build_process(args)
    bins = [int(b) for b in args.bins_list.split(",")]
    thrs = [float(t) for t in args.thr_list.split(",")]
    reports = _diag.x_thr_sweep(
        intensity, bins, thrs, config=_grid_config(args), scenario=intensity.name
    )
    rows = [r.rows()[0] for r in reports]
    _rows_out(args, ["scenario", "bins", "x_thr", "pos_mass", "neg_mass"], rows)
    return 0


def _cmd_bench(args):
    intensity = _build_process(args)
    report = _diag.speed_benchmark(
        intensity,
        _grid_config(args),
        SamplerBudget.jumps(args.n_jumps),
        replicates=args.replicates,
        scenario=intensity.name,
        seed=args.seed,
        reference_replicates=args.reference_replicates,
    )
    _rows_out(
        args,
        ["scenario", "build_s", "approx_s", "reference_s", "ratio", "ratio_reuse"],
        report.rows(),
    )
    return 0


def _cmd_corm(args):
    directing = _corm.directing_intensity_beta_scores(args.M, args.c, args.xi)
    if args.verify:
        marginal = beta_process(args.M, args.c)
        probes = np.geomspace(1e-6, 0.99, 20)
        res = _corm.verify_integral_equation(
            marginal, _corm.ScoreDistribution(args.xi), directing, probes
        )
        sys.stdout.write(f"max relative residual: {res:.6e}\n")
        return 0
    if args.curve:
        zs = np.geomspace(1e-6, 1 - 1e-6, 500)
        rows = [{"z": z, "intensity": v} for z, v in zip(zs, directing.fn(zs))]
        _rows_out(args, ["z", "intensity"], rows)
        return 0
    budget = (
        SamplerBudget.threshold(args.min_jump)
        if args.min_jump is not None
        else SamplerBudget.jumps(args.n_jumps)
    )
    cs = _corm.sample_corm(
        directing,
        _corm.ScoreDistribution(args.xi),
        args.d,
        GridConfig(n_points=args.bins),
        args.seed,
        budget,
    )
    rows = []
    for i in range(len(cs.directing)):
        row = {
            "jump": cs.directing.jumps[i],
            "location": cs.directing.locations[i],
        }
        for j in range(cs.d):
            row[f"weight_{j}"] = cs.weights[j, i]
        rows.append(row)
    fields = ["jump", "location"] + [f"weight_{j}" for j in range(cs.d)]
    _rows_out(args, fields, rows)
    return 0


def _occupancy_posterior(args):
    if getattr(args, "synthetic", False):
        data = _occ.synthetic_occupancy([0.6, 0.06], 0.2, 10, 5, rng=args.seed)
        with open(args.data, "w") as fh:
            fh.write(data.to_csv())
    with open(args.data) as fh:
        data = _occ.OccupancyData.from_csv(fh.read())
    prior = _occ.OccupancyPrior.beta(args.m, args.c)
    config = GridConfig(n_points=args.bins)
    return _occ.fit_posterior(prior, data, config, q_cells=args.q_cells), data


def _cmd_occupancy_fit(args):
    posterior, data = _occupancy_posterior(args)
    rows = []
    pts = posterior.envelope.points
    for gi, grid in enumerate(posterior.fixed_point_grids):
        t_mid = grid.theta_mids
        marg = grid.masses.sum(axis=1)
        for t, m in zip(t_mid, marg):
            rows.append(
                {"component": f"species_{grid.species}", "theta": t, "mass": m}
            )
    masses = posterior.undiscovered_cell_masses.sum(axis=1)
    t_mid = np.sqrt(pts[:-1] * pts[1:])
    for t, m in zip(t_mid, masses):
        rows.append({"component": "undiscovered", "theta": t, "mass": m})
    _rows_out(args, ["component", "theta", "mass"], rows)
    return 0


def _cmd_occupancy_predict(args):
    posterior, data = _occupancy_posterior(args)
    pred = _occ.run_predictive(
        posterior,
        K_sub=args.K_sub,
        r=args.r,
        n_mc=args.n_mc,
        cap=args.cap,
        rng=args.seed,
    )
    _rows_out(args, ["count", "prob"], pred.rows())
    return 0


_COMMANDS = {
    "sample": _cmd_sample,
    "precision": _cmd_precision,
    "reject-mass": _cmd_reject_mass,
    "thr-sweep": _cmd_thr_sweep,
    "bench": _cmd_bench,
    "corm": _cmd_corm,
    "occupancy-fit": _cmd_occupancy_fit,
    "occupancy-predict": _cmd_occupancy_predict,
}


def run(argv) -> int:
    """Parse argv and execute; returns the process exit code."""
    parser = _parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        return _COMMANDS[args.command](args)
    except CrmError as exc:
        sys.stderr.write(f"error: {exc}\n")
        return 1


def main() -> None:
    sys.exit(run(sys.argv[1:]))


if __name__ == "__main__":
    main()
