"""Run preconditioned solves over a parameter grid."""

from __future__ import annotations

import logging
import time

import numpy as np

from ..adaptive import Choice, choose_preconditioner, estimate_rank
from ..errors import NumericError
from ..kernel import KernelFamily, KernelOperator
from ..linalg import pcg
from ..precond import build_afn, build_fps_nystrom, build_fsai_plain, build_ran
from .config import METHODS, ConfigError, kernel_from_param
from .data import gen_synthetic, load_points_csv, load_points_sparse_text
from .results import ResultRow

log = logging.getLogger(__name__)

_PARAM_LABEL = {
    KernelFamily.GAUSSIAN: "l2",
    KernelFamily.MATERN32: "inv_l",
    KernelFamily.INVERSE_MULTIQUADRIC: "c",
}


def load_dataset(config):
    """Point set described by the config (synthetic cube or a file)."""
    if config.source == "synthetic":
        ps = gen_synthetic(config.n, config.d, config.edge, config.data_seed)
    elif config.source == "csv":
        ps = load_points_csv(config.path)
    else:
        ps = load_points_sparse_text(config.path, config.dim)
    if ps.n > config.n_max:
        raise ConfigError(
            f"n = {ps.n} exceeds the dense-run limit n_max = {config.n_max}; "
            "raise n_max explicitly if the machine can hold the kernel matrix"
        )
    return ps


def rhs(n, seed):
    """Right-hand side with i.i.d. uniform entries in [-0.5, 0.5]."""
    return np.random.default_rng(seed).uniform(-0.5, 0.5, size=n)


def kernel_label(family, param):
    return f"{family.value}:{_PARAM_LABEL[family]}={param:g}"


class _EstimateCache:
    """Rank estimates per (param, seed); independent of mu."""

    def __init__(self, config, ps):
        self.config = config
        self.ps = ps
        self._store = {}

    def get(self, spec, param, seed):
        key = (param, seed)
        if key not in self._store:
            t0 = time.perf_counter()
            est = estimate_rank(spec, self.ps, self.config.subsample, seed,
                                threshold=self.config.threshold)
            self._store[key] = (est, time.perf_counter() - t0)
        return self._store[key]


def build_method(method, spec, ps, seed, config, estimate=None):
    """Construct the preconditioner for one method name.

    Returns ``(apply_minv or None, k)`` where ``k`` is the landmark rank used
    (the rank estimate for the estimate-driven methods).
    """
    n = ps.n
    if method not in METHODS:
        raise ConfigError(f"unknown method {method!r}")
    if method == "cg":
        return None, 0
    if method == "fsai":
        return build_fsai_plain(spec, ps, config.fsai_w), 0
    if method == "ran":
        k = min(config.ran_rank, n)
        return build_ran(spec, ps, k, rng=seed), k
    if estimate is None:
        estimate = estimate_rank(spec, ps, config.subsample, seed, threshold=config.threshold)
    k_hat = estimate.k_hat
    if method == "afn":
        k = max(1, min(config.landmark_cap, k_hat, n - 1))
        return build_afn(spec, ps, k, w=config.afn_w, rng=seed,
                         landmark_cap=config.landmark_cap), k_hat
    if method == "nystrom":
        return build_fps_nystrom(spec, ps, min(k_hat, n)), k_hat
    choice = choose_preconditioner(
        spec, ps, overrides={"k_hat": k_hat, "threshold": config.threshold,
                             "landmark_cap": config.landmark_cap})
    if choice.chosen is Choice.AFN:
        return build_afn(spec, ps, choice.k_used, w=config.afn_w, rng=seed,
                         landmark_cap=config.landmark_cap), k_hat
    return build_fps_nystrom(spec, ps, choice.k_used), k_hat


def solve_cell(method, spec, ps, op, seed, config, estimates=None, param=None):
    """One PCG run; numerical failures are recorded, never raised."""
    family = spec.family
    label = kernel_label(family, param)
    b = rhs(ps.n, seed)
    setup = 0.0
    k = 0
    try:
        estimate = None
        if method in ("afn", "nystrom", "adaptive"):
            estimate, est_time = estimates.get(spec, param, seed)
            setup += est_time
        t0 = time.perf_counter()
        precond, k = build_method(method, spec, ps, seed, config, estimate)
        setup += time.perf_counter() - t0
        _, report = pcg(op, b, precond, tol=config.tol, maxit=config.maxit)
        iters, converged, relres, solve_s = (report.iterations, report.converged,
                                             float(report.final_relres), report.solve_seconds)
    except NumericError as exc:
        log.warning("%s %s mu=%g seed=%d failed: %s", method, label, spec.mu, seed, exc)
        iters, converged, relres, solve_s = 0, False, float("nan"), 0.0
    if not config.record_timings:
        setup = solve_s = 0.0
    return ResultRow(label, family.value, float(param), float(spec.mu), method, int(k),
                     int(iters), bool(converged), float(setup), float(solve_s), relres, int(seed))


def run_sweep(config, ps=None, progress=None):
    """All grid cells of ``config`` in grid order (param, mu, method), then seed."""
    config.validate()
    ps = load_dataset(config) if ps is None else ps
    rows = []
    for param in config.params:
        base = kernel_from_param(config.family, param, 0.0, config.imq_p)
        estimates = _EstimateCache(config, ps)
        op = None
        for mu in config.mu:
            spec = base.with_mu(mu)
            if op is None:
                op = KernelOperator(spec, ps)
            else:
                op.shift = mu
            for method in config.methods:
                for seed in config.seeds:
                    row = solve_cell(method, spec, ps, op, seed, config, estimates, param)
                    rows.append(row)
                    if progress is not None:
                        progress(row)
    return rows
