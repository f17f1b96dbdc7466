"""Plot-ready CSV data for spectra, Nystrom error curves and entry histograms."""

from __future__ import annotations

import csv

import numpy as np

from ..adaptive import estimate_rank
from ..errors import ArgumentError, SizeError
from ..geometry import fps_sample, random_sample
from ..kernel import KernelSpec, assemble_block, full_kernel
from ..linalg import cholesky, tri_solve
from ..precond import nystrom_error_curve
from .config import kernel_from_param
from .results import format_float

KINDS = ("spectrum", "fill_vs_error", "histogram", "subsample_match")
DENSE_FIGURE_LIMIT = 5000
HIST_MIN_EXP = -16


def _guard(n):
    if n > DENSE_FIGURE_LIMIT:
        raise SizeError(f"figure data needs dense n x n matrices; n = {n} > {DENSE_FIGURE_LIMIT}")


def spectrum_data(ps, family, params, mu):
    """Eigenvalues (descending) of ``K + mu I`` for each kernel parameter."""
    _guard(ps.n)
    header = ["index"] + [f"param={p:g}" for p in params]
    cols = []
    for p in params:
        spec = kernel_from_param(family, p, mu)
        ev = np.linalg.eigvalsh(full_kernel(spec, ps))[::-1] + mu
        cols.append(ev)
    rows = [[i + 1] + [c[i] for c in cols] for i in range(ps.n)]
    return header, rows


def fill_vs_error_data(ps, spec, ks=None, seed=0, seed_index=None):
    """Fill distance and relative Nystrom error against k, FPS vs random landmarks."""
    _guard(ps.n)
    ks = list(range(1, ps.n + 1)) if ks is None else sorted(set(int(k) for k in ks))
    if not ks or ks[0] < 1 or ks[-1] > ps.n:
        raise ArgumentError(f"ranks must lie in [1, {ps.n}]")
    kmax = ks[-1]
    kmat = full_kernel(spec, ps)
    fps = fps_sample(ps, kmax, seed_index)
    rnd = random_sample(ps, kmax, seed)
    err_fps = dict(nystrom_error_curve(kmat, fps.indices, ranks=ks))
    err_rnd = dict(nystrom_error_curve(kmat, rnd.indices, ranks=ks))
    header = ["k", "fill_fps", "fill_random", "error_fps", "error_random"]
    rows = [[k, fps.fill_trace[k - 1], rnd.fill_trace[k - 1], err_fps[k], err_rnd[k]] for k in ks]
    return header, rows


def magnitude_histogram(matrix, min_exp=HIST_MIN_EXP):
    """Counts of ``|a_ij| / max|a|`` per decade.

    Returns ``(labels, counts)``; label ``e`` counts values in
    ``[10^e, 10^(e+1))`` for ``e = min_exp..0`` and ``"underflow"`` counts
    values below ``10^min_exp`` (including exact zeros).
    """
    a = np.abs(np.asarray(matrix, dtype=np.float64)).ravel()
    top = a.max() if a.size else 0.0
    if top > 0:
        a = a / top
    labels = ["underflow"] + list(range(min_exp, 1))
    counts = np.zeros(len(labels), dtype=np.int64)
    small = a < 10.0 ** min_exp
    counts[0] = np.count_nonzero(small)
    exps = np.floor(np.log10(a[~small])).astype(np.int64)
    exps = np.clip(exps, min_exp, 0)
    np.add.at(counts, exps - min_exp + 1, 1)
    return labels, counts


def schur_matrices(spec, ps, k, seed_index=None):
    """``K22 + mu I``, the Schur complement ``S`` and ``S^{-1}`` for FPS landmarks."""
    _guard(ps.n)
    land = fps_sample(ps, k, seed_index).indices
    rest = np.setdiff1d(np.arange(ps.n), land)
    k11 = assemble_block(spec, ps, land).values + spec.mu * np.eye(land.size)
    k12 = assemble_block(spec, ps, land, rest).values
    k22 = assemble_block(spec, ps, rest).values + spec.mu * np.eye(rest.size)
    v = tri_solve(cholesky(k11), k12, "lower")
    schur = k22 - v.T @ v
    schur = 0.5 * (schur + schur.T)
    return k22, schur, np.linalg.inv(schur)


def histogram_data(spec, ps, k, seed_index=None):
    mats = schur_matrices(spec, ps, k, seed_index)
    labels = None
    cols = []
    for mat in mats:
        labels, counts = magnitude_histogram(mat)
        cols.append(counts)
    header = ["log10_bin", "k22_mu", "schur", "schur_inv"]
    rows = [[lab] + [int(c[i]) for c in cols] for i, lab in enumerate(labels)]
    return header, rows


def small_entry_fraction(matrix, cutoff=1e-10):
    """Fraction of entries with ``|a_ij| / max|a| < cutoff``."""
    a = np.abs(np.asarray(matrix))
    return float(np.count_nonzero(a < cutoff * a.max()) / a.size)


def subsample_crossing(spec, ps, m, seed, tol=0.1, seed_index=None):
    """Subsample error curve (coordinates scaled by ``(m/n)^(1/d)``) and its crossing rank."""
    est = estimate_rank(spec, ps, m, seed, seed_index=seed_index, tol=tol, threshold=np.inf)
    curve, r = est.error_curve, est.r_subsample
    return curve, r


def subsample_match_data(spec, ps, m, seed=0, seed_index=None):
    """Subsample curve at rank ``r`` placed at ``r n / m`` next to the full curve."""
    _guard(ps.n)
    if not 2 <= m <= ps.n:
        raise ArgumentError(f"subsample size must satisfy 2 <= m <= n = {ps.n}")
    curve, _ = subsample_crossing(spec, ps, m, seed, seed_index=seed_index)
    scale = ps.n / m
    full_ranks = [min(ps.n, max(1, int(round(r * scale)))) for r, _ in curve]
    full = dict(nystrom_error_curve(full_kernel(spec, ps), fps_sample(ps, ps.n, seed_index).indices,
                                    ranks=full_ranks))
    header = ["rank", "error_full", "error_subsample"]
    rows = [[fr, full[fr], err] for fr, (_, err) in zip(full_ranks, curve)]
    return header, rows


def write_csv(path, header, rows):
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(header)
        for row in rows:
            writer.writerow([format_float(v) if isinstance(v, float) or isinstance(v, np.floating)
                             else v for v in row])
    return path


def emit_figure_data(kind, path, ps, spec=None, family="gaussian", params=(1.0,), mu=1e-4,
                     k=100, ks=None, m=100, seed=0, seed_index=None):
    """Compute one figure's data and write it as CSV to ``path``."""
    if kind == "spectrum":
        header, rows = spectrum_data(ps, family, params, mu)
    elif kind == "fill_vs_error":
        header, rows = fill_vs_error_data(ps, spec or KernelSpec(), ks, seed, seed_index)
    elif kind == "histogram":
        header, rows = histogram_data(spec or KernelSpec(mu=mu), ps, k, seed_index)
    elif kind == "subsample_match":
        header, rows = subsample_match_data(spec or KernelSpec(), ps, m, seed, seed_index)
    else:
        raise ArgumentError(f"unknown figure kind {kind!r}; choose from {KINDS}")
    return write_csv(path, header, rows)
