"""Command-line entry point: ``gmm-dpi {theory,sweep,learn-a,eta-max,dpi-check}``.

Machine-readable CSV goes to stdout (or ``--out``); progress and diagnostics
go to stderr.  Exit status: 0 success, 1 runtime failure, 2 usage or config
error.  ``GMM_DPI_JOBS`` sets the default for ``sweep --jobs``.
"""

import argparse
import csv
import logging
import os
import sys

import numpy as np

from . import closed_form as cf
from .config import ConfigError, load_config
from .dpi import random_chain, verify_dpi
from .gmm import GmmModel, make_mu, sample_test_points
from .processing import SampledSecondMoment, construct_processing, learn_direction, \
    power_iteration, save_processing
from .results import emit_results, row_from_aggregate
from .rng import substream
from .simulation import run_experiment

log = logging.getLogger("gmm_dpi")
JOBS_ENV = "GMM_DPI_JOBS"


def _csv_out(header, rows, out=None):
    fh = open(out, "w", newline="") if out else sys.stdout
    try:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for r in rows:
            w.writerow(f"{v:.9g}" if isinstance(v, float) else v for v in r)
    finally:
        if out:
            fh.close()


def cmd_theory(args):
    p = cf.p_hat(args.snr, args.n, args.gamma, args.dim)
    header, row = ["snr", "gamma", "n", "dim", "p_hat"], [args.snr, args.gamma, args.n, args.dim, p]
    if args.k is not None:
        n_total = (1 + args.gamma) * args.n
        header += ["k", "p_hat_k", "eta_theory", "eta_asym"]
        row += [args.k, cf.p_hat(args.snr, args.n, args.gamma, args.k),
                cf.efficiency_theoretical(args.snr, args.n, args.gamma, args.dim, args.k),
                cf.efficiency_asymptotic(args.snr, n_total, args.gamma, args.dim, args.k)]
    _csv_out(header, [row], args.out)
    return 0


def cmd_sweep(args):
    cfg = load_config(args.config)
    trials = args.trials or cfg.trials
    seed = cfg.seed if args.seed is None else args.seed
    aggs = run_experiment(
        cfg.d, cfg.grid(), trials, seed, sigma=cfg.sigma, test_mode=cfg.test_mode,
        n_test=cfg.n_test, a_source=cfg.a_source, m_unlabeled=cfg.m_unlabeled,
        unlabeled_draw=cfg.unlabeled_draw, jobs=args.jobs,
    )
    failed = [a for a in aggs if a.error]
    for a in failed:
        print(f"grid point S={a.snr} gamma={a.gamma} n_train={a.n_train} k={a.k} failed: "
              f"{a.error}", file=sys.stderr)
    good = [row_from_aggregate(a) for a in aggs if not a.error]
    if good:
        emit_results(good, args.out)
    return 1 if failed else 0


def cmd_learn_a(args):
    mu = make_mu(args.d, args.snr, args.sigma, substream(args.seed, 0))
    g = substream(args.seed, 1)
    if args.draw == "samples":
        y = np.where(g.random(args.m) < 0.5, -1.0, 1.0)
        X = y[:, None] * mu + args.sigma * g.standard_normal((args.m, args.d))
        est = learn_direction(X, rng=g)
    else:
        est = power_iteration(SampledSecondMoment(mu, args.sigma, args.m, g), args.d, rng=g)
    A = construct_processing(est.direction, args.k)
    cos = abs(est.direction @ mu) / np.linalg.norm(mu)
    ratio = np.linalg.norm(A.rows @ mu) / np.linalg.norm(mu)
    _csv_out(["d", "k", "m", "snr", "cos_angle", "top_eigenvalue", "iterations", "orth_error",
              "mean_norm_ratio"],
             [[args.d, args.k, args.m, args.snr, float(cos), est.top_eigenvalue,
               est.iterations_used, A.orthonormality_error(), float(ratio)]])
    if args.out:
        save_processing(A, args.out)
    if args.samples_out:
        x, labels = sample_test_points(GmmModel(mu, args.sigma), args.n_points, substream(args.seed, 2))
        z = x @ A.rows.T
        _csv_out(["label"] + [f"x{i}" for i in range(args.d)] + [f"z{i}" for i in range(args.k)],
                 [[int(l)] + list(map(float, xi)) + list(map(float, zi))
                  for l, xi, zi in zip(labels, x, z)], args.samples_out)
    return 0


def cmd_eta_max(args):
    rows = []
    r = args.d / args.k
    for s in args.snr:
        res = cf.find_eta_max(s, args.gamma, args.d, args.k)
        rows.append([s, args.gamma, args.d, args.k, res.n_max, res.eta_max, int(res.certified),
                     cf.n_max_approx(s, args.k, r, "low_snr"),
                     cf.n_max_approx(s, args.k, r, "high_snr")])
    _csv_out(["snr", "gamma", "d", "k", "n_max", "eta_max", "certified", "n_max_low_snr",
              "n_max_high_snr"], rows, args.out)
    return 0


def cmd_dpi_check(args):
    rng = np.random.default_rng(args.seed)
    held = sum(verify_dpi(random_chain(rng, max_alphabet=args.max_alphabet)).holds
               for _ in range(args.random))
    print(f"{held}/{args.random} hold")
    return 0 if held == args.random else 1


def _positive_int(text):
    v = int(text)
    if v < 1:
        raise argparse.ArgumentTypeError(f"expected a positive integer, got {text}")
    return v


def build_parser():
    p = argparse.ArgumentParser(prog="gmm-dpi", description=__doc__.splitlines()[0])
    p.add_argument("-v", "--verbose", action="store_true", help="progress logging on stderr")
    sub = p.add_subparsers(dest="command", required=True)

    t = sub.add_parser("theory", help="closed-form error / efficiency at one point")
    t.add_argument("--snr", type=float, required=True)
    t.add_argument("--gamma", type=float, default=1.0)
    t.add_argument("--n", type=float, required=True, help="class-1 training count N")
    t.add_argument("--dim", type=_positive_int, required=True)
    t.add_argument("--k", type=_positive_int, help="processed dimension; adds efficiency columns")
    t.add_argument("--out")
    t.set_defaults(func=cmd_theory)

    s = sub.add_parser("sweep", help="Monte-Carlo sweep from a config file")
    s.add_argument("--config", required=True)
    s.add_argument("--out")
    s.add_argument("--jobs", type=_positive_int, default=int(os.environ.get(JOBS_ENV, "1")))
    s.add_argument("--trials", type=_positive_int, help="override the config's trial count")
    s.add_argument("--seed", type=int, help="override the config's seed")
    s.set_defaults(func=cmd_sweep)

    a = sub.add_parser("learn-a", help="learn the processing matrix from unlabeled data")
    a.add_argument("--d", type=_positive_int, default=2000)
    a.add_argument("--k", type=_positive_int, default=1000)
    a.add_argument("--snr", type=float, default=0.5625)
    a.add_argument("--sigma", type=float, default=1.0)
    a.add_argument("--m", type=_positive_int, default=50_000)
    a.add_argument("--seed", type=int, default=0)
    a.add_argument("--draw", choices=["moment", "samples"], default="moment")
    a.add_argument("--out", help="dump A (.csv or binary)")
    a.add_argument("--samples-out", help="CSV of labeled points and their projections")
    a.add_argument("--n-points", type=_positive_int, default=1000)
    a.set_defaults(func=cmd_learn_a)

    e = sub.add_parser("eta-max", help="maximal efficiency and its maximiser")
    e.add_argument("--snr", type=float, nargs="+", required=True)
    e.add_argument("--gamma", type=float, default=1.0)
    e.add_argument("--d", type=_positive_int, default=2000)
    e.add_argument("--k", type=_positive_int, default=1000)
    e.add_argument("--out")
    e.set_defaults(func=cmd_eta_max)

    c = sub.add_parser("dpi-check", help="Bayes-error DPI on random discrete chains")
    c.add_argument("--random", type=_positive_int, default=1000)
    c.add_argument("--seed", type=int, default=0)
    c.add_argument("--max-alphabet", type=_positive_int, default=8)
    c.set_defaults(func=cmd_dpi_check)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        stream=sys.stderr, format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"gmm-dpi: {exc}", file=sys.stderr)
        return 2
    except (ValueError, RuntimeError, OSError) as exc:
        print(f"gmm-dpi {args.command}: error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
