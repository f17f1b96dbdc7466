"""Command line entry point: ``afnbench {gen,estimate-rank,solve,sweep,figure}``.

Exit status is 0 on success, 1 on configuration/input errors and 2 when a
single ``solve`` run fails numerically. ``AFNBENCH_NUM_THREADS`` caps the
BLAS thread pool.
"""

from __future__ import annotations

import argparse
import logging
import os
import sys

from ..adaptive import choose_preconditioner, estimate_rank
from ..errors import ArgumentError, NumericError, ParseError
from ..kernel import KernelOperator
from ..linalg import pcg
from .config import METHODS, ConfigError, ExperimentConfig, kernel_from_param, load_config
from .data import save_points_csv
from .figures import KINDS, emit_figure_data
from .results import emit_results, rows_to_csv
from .sweep import build_method, kernel_label, load_dataset, rhs, run_sweep

THREADS_ENV = "AFNBENCH_NUM_THREADS"

log = logging.getLogger("afnprecond.bench")


def _floats(text):
    return [float(t) for t in text.split(",") if t.strip()]


def _ints(text):
    return [int(t) for t in text.split(",") if t.strip()]


def _add_dataset(p):
    g = p.add_argument_group("dataset")
    g.add_argument("--points", help="CSV file of coordinates, one point per line")
    g.add_argument("--sparse", help="sparse 'label index:value' text file")
    g.add_argument("--dim", type=int, help="declared dimension for --sparse")
    g.add_argument("--n", type=int, default=1000, help="synthetic point count")
    g.add_argument("--d", type=int, default=3, help="synthetic dimension")
    g.add_argument("--edge", type=float, help="synthetic cube edge (default n^(1/d))")
    g.add_argument("--data-seed", type=int, default=0)
    g.add_argument("--n-max", type=int, default=20000, help="refuse dense runs above this n")


def _add_kernel(p, multi=False):
    p.add_argument("--kernel", default="gaussian", help="gaussian | matern32 | imq")
    if multi:
        p.add_argument("--params", type=_floats, default=[1.0],
                       help="comma list: l^2 (gaussian), 1/l (matern32) or c (imq)")
    else:
        p.add_argument("--param", type=float, default=1.0,
                       help="l^2 (gaussian), 1/l (matern32) or c (imq)")
    p.add_argument("--mu", type=float, default=1e-4)
    p.add_argument("--imq-p", type=float, default=1.0)


def _config_from_args(args, **extra):
    source, path = "synthetic", None
    if getattr(args, "points", None):
        source, path = "csv", args.points
    elif getattr(args, "sparse", None):
        source, path = "sparse", args.sparse
    return ExperimentConfig(
        source=source, path=path, dim=getattr(args, "dim", None), n=args.n, d=args.d,
        edge=args.edge, data_seed=args.data_seed, n_max=args.n_max,
        kernel=getattr(args, "kernel", "gaussian"), imq_p=getattr(args, "imq_p", 1.0), **extra,
    )


def cmd_gen(args):
    cfg = _config_from_args(args)
    ps = load_dataset(cfg)
    if args.out:
        save_points_csv(ps, args.out)
    else:
        for row in ps.points:
            print(",".join(f"{x:.17g}" for x in row))
    return 0


def cmd_estimate_rank(args):
    cfg = _config_from_args(args)
    ps = load_dataset(cfg)
    spec = kernel_from_param(cfg.family, args.param, args.mu, cfg.imq_p)
    choice = choose_preconditioner(spec, ps, args.m, args.seed,
                                   overrides={"threshold": args.threshold})
    est = choice.estimate
    print(f"k_hat={est.k_hat} r={est.r_subsample} m={est.m} refined={str(est.refined).lower()} "
          f"choice={choice.chosen.value} k_used={choice.k_used}")
    return 0


def cmd_solve(args):
    cfg = _config_from_args(args, params=[args.param], mu=[args.mu], methods=[args.method],
                            tol=args.tol, maxit=args.maxit, seeds=[args.seed],
                            afn_w=args.w if args.w else 100, fsai_w=args.w if args.w else 400,
                            subsample=args.m)
    ps = load_dataset(cfg)
    spec = kernel_from_param(cfg.family, args.param, args.mu, cfg.imq_p)
    estimate = None
    if args.method in ("afn", "nystrom", "adaptive"):
        estimate = estimate_rank(spec, ps, args.m, args.seed, threshold=cfg.threshold)
    precond, k = build_method(args.method, spec, ps, args.seed, cfg, estimate)
    op = KernelOperator(spec, ps)
    _, report = pcg(op, rhs(ps.n, args.seed), precond, tol=cfg.tol, maxit=cfg.maxit)
    print(f"{kernel_label(cfg.family, args.param)} method={args.method} k={k} "
          f"iters={report.iterations} converged={str(report.converged).lower()} "
          f"relres={report.final_relres:.3e}")
    return 0


def cmd_sweep(args):
    configs = load_config(args.config)
    if args.section:
        configs = [c for c in configs if c.name in args.section]
        if not configs:
            raise ConfigError(f"no sections named {args.section}")
    for cfg in configs:
        if args.seeds:
            cfg.seeds = args.seeds
        if args.no_timings:
            cfg.record_timings = False
        rows = run_sweep(cfg, progress=lambda r: log.info(
            "%s mu=%g %s seed=%d iters=%d converged=%s", r.kernel, r.mu, r.method, r.seed,
            r.iters, r.converged))
        out = args.out if args.out and len(configs) == 1 else cfg.output
        if out:
            emit_results(rows, out, cfg.format)
            log.info("wrote %d rows to %s", len(rows), out)
        else:
            sys.stdout.write(rows_to_csv(rows))
    return 0


def cmd_figure(args):
    cfg = _config_from_args(args, params=args.params, mu=[args.mu])
    ps = load_dataset(cfg)
    spec = kernel_from_param(cfg.family, args.params[0], args.mu, cfg.imq_p)
    ks = _ints(args.ks) if args.ks else None
    emit_figure_data(args.kind, args.out, ps, spec=spec, family=cfg.family, params=args.params,
                     mu=args.mu, k=args.k, ks=ks, m=args.m, seed=args.seed)
    return 0


def build_parser():
    parser = argparse.ArgumentParser(prog="afnbench", description=__doc__.splitlines()[0])
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("gen", help="write a synthetic uniform point cloud as CSV")
    _add_dataset(p)
    p.add_argument("--out")
    p.set_defaults(func=cmd_gen)

    p = sub.add_parser("estimate-rank", help="estimate the Nystrom rank and pick a preconditioner")
    _add_dataset(p)
    _add_kernel(p)
    p.add_argument("--m", type=int, help="subsample size (default max(100, n/100), <= 500)")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--threshold", type=int, default=2000)
    p.set_defaults(func=cmd_estimate_rank)

    p = sub.add_parser("solve", help="one preconditioned CG solve")
    _add_dataset(p)
    _add_kernel(p)
    p.add_argument("--method", choices=METHODS, default="adaptive")
    p.add_argument("--tol", type=float, default=1e-4)
    p.add_argument("--maxit", type=int, default=500)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--w", type=int, help="FSAI pattern size (default 100 for afn, 400 for fsai)")
    p.add_argument("--m", type=int, help="rank-estimation subsample size")
    p.set_defaults(func=cmd_solve)

    p = sub.add_parser("sweep", help="run the sweeps of a config file")
    p.add_argument("config")
    p.add_argument("--section", action="append", help="run only these sections")
    p.add_argument("--seeds", type=_ints)
    p.add_argument("--out", help="output path (single-section runs)")
    p.add_argument("--no-timings", action="store_true", help="write zero timings (reproducible bytes)")
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("figure", help="write plot-ready CSV data for one figure kind")
    _add_dataset(p)
    _add_kernel(p, multi=True)
    p.add_argument("--kind", choices=KINDS, required=True)
    p.add_argument("--k", type=int, default=100, help="landmarks (histogram)")
    p.add_argument("--ks", help="comma list of ranks (fill_vs_error)")
    p.add_argument("--m", type=int, default=100, help="subsample size (subsample_match)")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_figure)
    return parser


def _limit_threads():
    value = os.environ.get(THREADS_ENV)
    if not value:
        return None
    from threadpoolctl import threadpool_limits

    return threadpool_limits(limits=int(value))


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(message)s")
    limiter = _limit_threads()
    try:
        return args.func(args)
    except (ConfigError, ParseError, ArgumentError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except NumericError as exc:
        print(f"numeric failure: {exc}", file=sys.stderr)
        return 2
    finally:
        if limiter is not None:
            limiter.restore_original_limits()


if __name__ == "__main__":
    sys.exit(main())
