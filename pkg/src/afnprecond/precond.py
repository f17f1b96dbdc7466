"""Nystrom, FSAI and adaptive factorized Nystrom (AFN) preconditioners.

Every preconditioner object is callable: ``P(r)`` returns ``M^{-1} r`` for a
vector indexed by the original point ids.
"""

from __future__ import annotations

import time
from collections import OrderedDict
from dataclasses import dataclass, field

import numpy as np
import scipy.linalg as sla

from .errors import ArgumentError, FactorizationError, SizeError
from .geometry import (
    LandmarkSelection,
    PointSet,
    SamplingMethod,
    SparsityPattern,
    fps_sample,
    knn_pattern,
    random_sample,
)
from .kernel import KernelBlock, assemble_block, full_kernel, kernel_matrix
from .linalg import (
    DEFAULT_JITTER,
    DENSE_EIG_LIMIT,
    CholeskyFactor,
    SparseLowerTriangular,
    cholesky,
    sparse_tri_apply,
    spectral_norm_sym,
    tri_solve,
)

LANDMARK_CAP = 2000
AFN_FSAI_NEIGHBORS = 100
FSAI_NEIGHBORS = 400
RAN_RANK = 3000
# Above this dimension AFN picks landmarks uniformly at random instead of by FPS.
FPS_DIM_LIMIT = 10
MEMORY_BUDGET = 2 << 30


# ---------------------------------------------------------------------------
# Nystrom
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class NystromPreconditioner:
    """Rank-k Nystrom approximation ``K ~ U diag(lam) U^T`` with ``U`` orthonormal.

    With ``scaled=True`` the inverse applied is
    ``(lam_k + mu) U (diag(lam) + mu)^{-1} U^T + (I - U U^T)``; otherwise
    ``U (diag(lam) + mu)^{-1} U^T + (I - U U^T) / mu``, the exact inverse of
    ``U diag(lam) U^T + mu I``.
    """

    U: np.ndarray
    lam: np.ndarray
    mu: float
    landmarks: LandmarkSelection
    jitter: float = 0.0
    scaled: bool = True
    setup_seconds: float = 0.0

    @property
    def k(self):
        return self.lam.size

    @property
    def lam_k(self):
        return float(self.lam[-1])

    @property
    def landmark_method(self):
        return self.landmarks.method

    def approximation(self):
        """Dense ``U diag(lam) U^T``."""
        return (self.U * self.lam) @ self.U.T

    def __call__(self, r):
        return apply_nystrom_inv(self, r)


def build_nystrom(spec, ps, sel, jitter_policy=DEFAULT_JITTER, scaled=True):
    """Nystrom preconditioner from the landmark selection ``sel``.

    ``K_{X,Xk} K_{Xk,Xk}^{-1} K_{Xk,X}`` is factored as ``F F^T`` with
    ``F = K_{X,Xk} R^{-T}``, ``R R^T = K_{Xk,Xk} (+ jitter)``; a thin QR of ``F``
    and an SVD of its triangular factor give ``U`` and ``lam``.
    """
    t0 = time.perf_counter()
    ids = sel.indices
    if ids.size > DENSE_EIG_LIMIT:
        raise SizeError(f"Nystrom rank {ids.size} exceeds the dense limit {DENSE_EIG_LIMIT}")
    c = assemble_block(spec, ps, np.arange(ps.n), ids).values
    try:
        chol = cholesky(c[ids], jitter_policy)
    except FactorizationError as exc:
        raise FactorizationError(f"landmark kernel block: {exc}", pivot=exc.pivot) from exc
    f = tri_solve(chol, c.T, "lower").T
    q, rf = np.linalg.qr(f, mode="reduced")
    us, s, _ = np.linalg.svd(rf)
    u = q @ us
    return NystromPreconditioner(
        U=u, lam=s * s, mu=spec.mu, landmarks=sel, jitter=chol.jitter_applied,
        scaled=scaled, setup_seconds=time.perf_counter() - t0,
    )


def build_ran(spec, ps, k=RAN_RANK, rng=None, **kwargs):
    """Nystrom preconditioner on ``min(k, n)`` uniformly random landmarks."""
    sel = random_sample(ps, min(k, ps.n), rng)
    return build_nystrom(spec, ps, sel, **kwargs)


def build_fps_nystrom(spec, ps, k, seed_index=None, **kwargs):
    return build_nystrom(spec, ps, fps_sample(ps, min(k, ps.n), seed_index), **kwargs)


def apply_nystrom_inv(precond, r, scaled=None):
    """Apply the inverse Nystrom preconditioner in O(nk)."""
    scaled = precond.scaled if scaled is None else scaled
    r = np.asarray(r, dtype=np.float64)
    if r.shape[0] != precond.U.shape[0]:
        raise ArgumentError(f"vector length {r.shape[0]} does not match n = {precond.U.shape[0]}")
    u = precond.U
    ur = u.T @ r
    low = u @ (ur / (precond.lam + precond.mu))
    rest = r - u @ ur
    if scaled:
        return (precond.lam_k + precond.mu) * low + rest
    if precond.mu <= 0:
        raise ArgumentError("the unscaled Nystrom inverse needs mu > 0")
    return low + rest / precond.mu


def nystrom_matrix(spec, ps, sel, jitter_policy=DEFAULT_JITTER):
    """Dense ``K_{X,Xk} K_{Xk,Xk}^{-1} K_{Xk,X}`` (diagnostics and tests)."""
    ids = sel.indices if isinstance(sel, LandmarkSelection) else np.asarray(sel)
    c = assemble_block(spec, ps, np.arange(ps.n), ids).values
    chol = cholesky(c[ids], jitter_policy)
    f = tri_solve(chol, c.T, "lower")
    return f.T @ f


def _norm(a, norm, tol):
    if norm == "spectral":
        return spectral_norm_sym(a, tol=tol)
    if norm == "fro":
        return float(np.linalg.norm(a))
    raise ArgumentError(f"norm must be 'spectral' or 'fro', got {norm!r}")


def nystrom_error(spec, ps, sel, relative=True, tol=1e-6, norm="spectral",
                  jitter_policy=DEFAULT_JITTER):
    """Norm of ``K - K_nys``, i.e. of ``K22 - K21 K11^{-1} K12``.

    With ``relative=True`` the norm is divided by ``||K||``.
    """
    ids = sel.indices if isinstance(sel, LandmarkSelection) else np.asarray(sel, dtype=np.intp)
    k = full_kernel(spec, ps)
    rest = np.setdiff1d(np.arange(ps.n), ids)
    if rest.size == 0:
        return 0.0
    chol = cholesky(k[np.ix_(ids, ids)], jitter_policy)
    v = tri_solve(chol, k[np.ix_(ids, rest)], "lower")
    schur = k[np.ix_(rest, rest)] - v.T @ v
    err = _norm(schur, norm, tol)
    if relative:
        err /= _norm(k, norm, tol)
    return err


def nystrom_error_curve(kmat, order, ranks=None, stop_below=None, tol=1e-6, norm="spectral"):
    """Relative Nystrom errors of nested landmark prefixes of ``order``.

    The residual ``K - K_nys`` for the first ``r`` landmarks is the Schur
    complement left after ``r`` steps of symmetric elimination in the given
    order, so all ranks come out of a single O(m^3) sweep.

    Parameters
    ----------
    kmat : (m, m) ndarray
        Symmetric positive semidefinite kernel matrix.
    order : sequence of int
        Landmark order (e.g. an FPS ordering of all ``m`` points).
    ranks : iterable of int, optional
        Ranks at which to record the error; default ``1..len(order)``.
    stop_below : float, optional
        Stop at the first recorded rank whose error is below this value.

    Returns
    -------
    list of (rank, relative_error)
    """
    order = np.asarray(order, dtype=np.intp)
    m = kmat.shape[0]
    rmax = order.size
    ranks = sorted(set(range(1, rmax + 1) if ranks is None else (int(r) for r in ranks)))
    if ranks and (ranks[0] < 1 or ranks[-1] > rmax):
        raise ArgumentError(f"ranks must lie in [1, {rmax}]")
    rest = np.setdiff1d(np.arange(m), order)
    perm = np.concatenate([order, rest])
    work = np.array(kmat[np.ix_(perm, perm)], dtype=np.float64)
    knorm = _norm(kmat, norm, tol)
    if knorm == 0:
        return [(r, 0.0) for r in ranks]
    floor = np.finfo(float).eps * max(np.trace(kmat), 1e-300)
    want = set(ranks)
    curve = []
    s = work
    for r in range(1, (ranks[-1] if ranks else 0) + 1):
        pivot = s[0, 0]
        col = s[1:, 0]
        s = s[1:, 1:]
        if pivot > floor:
            s -= np.multiply.outer(col, col / pivot)
        if r in want:
            err = _norm(0.5 * (s + s.T), norm, tol) / knorm if s.size else 0.0
            curve.append((r, err))
            if stop_below is not None and err < stop_below:
                break
    return curve


# ---------------------------------------------------------------------------
# FSAI
# ---------------------------------------------------------------------------


class DenseOracle:
    """Entry oracle over an explicit SPD matrix, addressed by pattern positions."""

    def __init__(self, matrix):
        self.matrix = np.asarray(matrix, dtype=np.float64)

    @property
    def m(self):
        return self.matrix.shape[0]

    def block(self, pos):
        return self.matrix[np.ix_(pos, pos)]


class KernelOracle:
    """Entries of ``K + mu I`` restricted to ``ids`` (positions index ``ids``)."""

    def __init__(self, spec, ps, ids):
        self.spec = spec
        self.ps = ps
        self.ids = np.asarray(ids, dtype=np.intp)

    @property
    def m(self):
        return self.ids.size

    def block(self, pos):
        sub = self.ps.points[self.ids[pos]]
        blk = kernel_matrix(self.spec, sub)
        blk[np.diag_indices_from(blk)] += self.spec.mu
        return blk


class SchurOracle:
    """Entries of ``S = K22 + mu I - K12^T (K11 + mu I)^{-1} K12`` on demand.

    ``S[a, b] = k(x_a, x_b) + mu [a == b] - <V[:, a], V[:, b]>`` with
    ``V = L^{-1} K12``. ``V`` is kept whole when it fits ``memory_bytes``;
    otherwise columns are computed lazily and held in an LRU cache.
    """

    def __init__(self, spec, ps, landmarks, rest, chol, k12=None,
                 memory_bytes=MEMORY_BUDGET, cache_columns=200):
        self.spec = spec
        self.ps = ps
        self.landmarks = np.asarray(landmarks, dtype=np.intp)
        self.rest = np.asarray(rest, dtype=np.intp)
        self.chol = chol
        self.cache_columns = max(1, int(cache_columns))
        self._cache = OrderedDict()
        self.V = None
        if 8 * self.landmarks.size * self.rest.size <= memory_bytes:
            if k12 is None:
                k12 = assemble_block(spec, ps, self.landmarks, self.rest).values
            self.V = tri_solve(chol, k12, "lower")

    @property
    def m(self):
        return self.rest.size

    def columns(self, pos):
        """``V[:, pos]``."""
        pos = np.asarray(pos, dtype=np.intp)
        if self.V is not None:
            return self.V[:, pos]
        missing = [p for p in pos.tolist() if p not in self._cache]
        if missing:
            kcols = kernel_matrix(self.spec, self.ps.points[self.landmarks],
                                  self.ps.points[self.rest[missing]])
            vcols = tri_solve(self.chol, kcols, "lower")
            for j, p in enumerate(missing):
                self._cache[p] = vcols[:, j]
        out = np.empty((self.landmarks.size, pos.size))
        for j, p in enumerate(pos.tolist()):
            out[:, j] = self._cache[p]
            self._cache.move_to_end(p)
        while len(self._cache) > max(self.cache_columns, pos.size):
            self._cache.popitem(last=False)
        return out

    def block(self, pos):
        pos = np.asarray(pos, dtype=np.intp)
        blk = kernel_matrix(self.spec, self.ps.points[self.rest[pos]])
        blk[np.diag_indices_from(blk)] += self.spec.mu
        v = self.columns(pos)
        blk -= v.T @ v
        return blk

    def entry(self, a, b):
        return float(self.block([a, b])[0, 1]) if a != b else float(self.block([a])[0, 0])

    def dense(self):
        return self.block(np.arange(self.m))


def build_fsai(oracle, pattern, jitter_policy=DEFAULT_JITTER):
    """Factorized sparse approximate inverse ``G`` with ``G^T G ~ S^{-1}``.

    Row ``i`` with index set ``J`` (``i`` last) solves ``S[J, J] y = e_i`` and
    stores ``y / sqrt(y_i)``, so ``diag(G S G^T) = 1``. Rows are independent.
    """
    if isinstance(oracle, np.ndarray):
        oracle = DenseOracle(oracle)
    rows = pattern.rows
    if len(rows) != oracle.m:
        raise ArgumentError(f"pattern has {len(rows)} rows, matrix has dimension {oracle.m}")
    values = []
    for i, cols in enumerate(rows):
        if cols.size == 0 or cols[-1] != i:
            raise ArgumentError(f"pattern row {i} must end with its diagonal")
        sjj = oracle.block(cols)
        try:
            chol = cholesky(sjj, jitter_policy)
        except FactorizationError as exc:
            raise FactorizationError(f"FSAI row {i}: local matrix not SPD ({exc})", pivot=i) from exc
        # With S_JJ = L L^T and i last, y / sqrt(y_i) reduces to L^{-T} e_last.
        e_last = np.zeros(cols.size)
        e_last[-1] = 1.0
        values.append(tri_solve(chol, e_last, "upper"))
    return SparseLowerTriangular.from_rows(list(rows), values)


@dataclass(frozen=True)
class FsaiPreconditioner:
    """``r -> P^T G^T G P r`` where ``P`` permutes into the pattern ordering."""

    G: SparseLowerTriangular
    ordering: np.ndarray
    w: int
    setup_seconds: float = 0.0

    def __call__(self, r):
        r = np.asarray(r, dtype=np.float64)
        rp = r[self.ordering]
        s = sparse_tri_apply(self.G, sparse_tri_apply(self.G, rp), transpose=True)
        out = np.empty_like(r)
        out[self.ordering] = s
        return out


def build_fsai_plain(spec, ps, w=FSAI_NEIGHBORS, ordering=None, jitter_policy=DEFAULT_JITTER):
    """FSAI of ``K + mu I`` on the nearest-earlier-neighbor pattern of size ``w``."""
    t0 = time.perf_counter()
    ordering = np.arange(ps.n) if ordering is None else np.asarray(ordering, dtype=np.intp)
    pattern = knn_pattern(ps, ordering, w)
    g = build_fsai(KernelOracle(spec, ps, ordering), pattern, jitter_policy)
    return FsaiPreconditioner(g, ordering, w, time.perf_counter() - t0)


# ---------------------------------------------------------------------------
# AFN
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class AfnFactors:
    """Factors of ``M = [L 0; K12^T L^{-T} G^{-1}] [L^T L^{-1} K12; 0 G^{-T}]``.

    ``ordering`` lists landmark ids first, then the remaining ids in their
    original order; ``G`` is indexed by positions within the remaining ids.
    """

    landmarks: LandmarkSelection
    L: CholeskyFactor
    K12: KernelBlock
    G: SparseLowerTriangular
    ordering: np.ndarray
    w: int
    mu: float
    pattern: SparsityPattern = field(repr=False, default=None)
    setup_seconds: float = 0.0

    @property
    def k(self):
        return self.landmarks.k

    @property
    def n(self):
        return self.ordering.size

    def __call__(self, r):
        return apply_afn_inv(self, r)


def build_afn(spec, ps, k, w=AFN_FSAI_NEIGHBORS, seed_index=None, rng=None,
              landmarks=None, fps_dim_limit=FPS_DIM_LIMIT, landmark_cap=LANDMARK_CAP,
              jitter_policy=DEFAULT_JITTER, memory_bytes=MEMORY_BUDGET):
    """Build the AFN preconditioner of ``K + mu I``.

    Landmarks come from FPS (uniform random above ``fps_dim_limit``
    dimensions) unless an explicit ``landmarks`` selection is given. The
    FSAI factor of the Schur complement uses the ``w``-nearest-earlier-neighbor
    pattern over the non-landmark points in their original order.
    """
    t0 = time.perf_counter()
    if landmarks is None:
        if not 1 <= k < ps.n:
            raise ArgumentError(f"AFN needs 1 <= k < n = {ps.n}, got k = {k}")
        if k > landmark_cap:
            raise ArgumentError(f"k = {k} exceeds the landmark cap {landmark_cap}")
        if ps.d > fps_dim_limit:
            landmarks = random_sample(ps, k, rng)
        else:
            landmarks = fps_sample(ps, k, seed_index)
    if w < 1:
        raise ArgumentError(f"w must be >= 1, got {w}")
    land = landmarks.indices
    if not 1 <= land.size < ps.n:
        raise ArgumentError(f"AFN needs 1 <= k < n = {ps.n}, got k = {land.size}")
    rest = np.setdiff1d(np.arange(ps.n), land)
    k11 = assemble_block(spec, ps, land).values
    k11[np.diag_indices_from(k11)] += spec.mu
    chol = cholesky(k11, jitter_policy)
    k12 = assemble_block(spec, ps, land, rest)
    oracle = SchurOracle(spec, ps, land, rest, chol, k12.values,
                         memory_bytes=memory_bytes, cache_columns=2 * w)
    pattern = knn_pattern(ps, rest, w)
    g = build_fsai(oracle, pattern, jitter_policy)
    return AfnFactors(
        landmarks=landmarks, L=chol, K12=k12, G=g,
        ordering=np.concatenate([land, rest]), w=w, mu=spec.mu, pattern=pattern,
        setup_seconds=time.perf_counter() - t0,
    )


def apply_afn_inv(factors, r):
    """Solve ``M s = r`` by the two-step block substitution.

    ``s2 = G^T G (r2 - K12^T (L L^T)^{-1} r1)``, then
    ``s1 = (L L^T)^{-1} (r1 - K12 s2)``.
    """
    r = np.asarray(r, dtype=np.float64)
    if r.shape[0] != factors.n:
        raise ArgumentError(f"vector length {r.shape[0]} does not match n = {factors.n}")
    k = factors.k
    rp = r[factors.ordering]
    r1, r2 = rp[:k], rp[k:]
    k12 = factors.K12.values
    t = factors.L.solve(r1)
    u = r2 - k12.T @ t
    s2 = sparse_tri_apply(factors.G, sparse_tri_apply(factors.G, u), transpose=True)
    s1 = factors.L.solve(r1 - k12 @ s2)
    out = np.empty_like(r)
    out[factors.ordering] = np.concatenate([s1, s2])
    return out


def afn_dense_matrix(factors):
    """Dense ``M`` in original id order (tests only; O(n^3))."""
    L = factors.L.L
    k12 = factors.K12.values
    ginv = sla.solve_triangular(factors.G.toarray(), np.eye(factors.G.m), lower=True)
    lower = np.block([[L, np.zeros((L.shape[0], ginv.shape[0]))],
                      [sla.solve_triangular(L, k12, lower=True).T, ginv]])
    m_perm = lower @ lower.T
    inv = np.argsort(factors.ordering)
    return m_perm[np.ix_(inv, inv)]
