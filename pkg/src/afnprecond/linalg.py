"""Dense factorizations, sparse triangular factors and preconditioned CG."""

from __future__ import annotations

import time
from dataclasses import dataclass, field

import numpy as np
import scipy.linalg as sla
import scipy.sparse as sp

from .errors import ArgumentError, FactorizationError, NumericError, SizeError

DENSE_EIG_LIMIT = 4000


@dataclass(frozen=True)
class JitterPolicy:
    """Diagonal shifts tried after a Cholesky breakdown.

    The first retry adds ``initial * trace(A) / k``; each further retry
    multiplies the shift by ``factor``.
    """

    initial: float = 1e-14
    factor: float = 10.0
    max_escalations: int = 6

    def shifts(self, a):
        k = a.shape[0]
        scale = np.trace(a) / k if k else 0.0
        if not scale > 0:
            scale = 1.0
        base = self.initial * scale
        return [base * self.factor ** i for i in range(self.max_escalations)]


DEFAULT_JITTER = JitterPolicy()
NO_JITTER = JitterPolicy(max_escalations=0)


@dataclass(frozen=True)
class CholeskyFactor:
    """Lower-triangular ``L`` with ``A + jitter I = L L^T``."""

    L: np.ndarray
    jitter_applied: float = 0.0

    @property
    def k(self):
        return self.L.shape[0]

    def solve(self, b):
        """``(L L^T)^{-1} b``."""
        return sla.cho_solve((self.L, True), b, check_finite=False)


def _potrf(a):
    c, info = sla.lapack.dpotrf(a, lower=1, clean=1, overwrite_a=0)
    return c, info


def cholesky(a, jitter_policy=DEFAULT_JITTER):
    """Cholesky factor of the symmetrized ``a``, escalating diagonal jitter on breakdown.

    Raises
    ------
    FactorizationError
        If every allowed shift still breaks down; ``pivot`` is the 0-based
        index of the last failing pivot.
    """
    a = np.asarray(a, dtype=np.float64)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise ArgumentError(f"cholesky needs a square matrix, got shape {a.shape}")
    a = 0.5 * (a + a.T)
    if a.shape[0] == 0:
        return CholeskyFactor(np.zeros((0, 0)))
    policy = jitter_policy or NO_JITTER
    shifts = [0.0] + policy.shifts(a)
    info = 0
    for shift in shifts:
        c, info = _potrf(a + shift * np.eye(a.shape[0]) if shift else a)
        if info == 0 and np.all(np.isfinite(c)):
            return CholeskyFactor(c, shift)
    raise FactorizationError(
        f"Cholesky breakdown at pivot {info - 1} after jitter up to {shifts[-1]:.3e}",
        pivot=int(info) - 1,
    )


def tri_solve(factor, b, mode="lower"):
    """Solve ``L x = b`` (``mode='lower'``) or ``L^T x = b`` (``mode='upper'``)."""
    L = factor.L if isinstance(factor, CholeskyFactor) else np.asarray(factor)
    b = np.asarray(b, dtype=np.float64)
    if b.shape[0] != L.shape[0]:
        raise ArgumentError(f"right-hand side has {b.shape[0]} rows, factor has {L.shape[0]}")
    if mode == "lower":
        return sla.solve_triangular(L, b, lower=True, check_finite=False)
    if mode == "upper":
        return sla.solve_triangular(L, b, lower=True, trans="T", check_finite=False)
    raise ArgumentError(f"mode must be 'lower' or 'upper', got {mode!r}")


def sym_eig(a, limit=DENSE_EIG_LIMIT):
    """Eigenvalues (descending) and orthonormal eigenvectors of a symmetric matrix."""
    a = np.asarray(a, dtype=np.float64)
    if a.shape[0] > limit:
        raise SizeError(f"dense eigendecomposition limited to size {limit}, got {a.shape[0]}")
    try:
        vals, vecs = np.linalg.eigh(0.5 * (a + a.T))
    except np.linalg.LinAlgError as exc:
        raise NumericError(f"symmetric eigensolver did not converge: {exc}") from exc
    return vals[::-1].copy(), vecs[:, ::-1].copy()


def spectral_norm_sym(a, tol=1e-6, dense_limit=400, rng=0):
    """Largest absolute eigenvalue of a symmetric matrix.

    Exact dense eigenvalues for small matrices, Lanczos (ARPACK) above
    ``dense_limit``.
    """
    a = np.asarray(a, dtype=np.float64)
    m = a.shape[0]
    if m == 0:
        return 0.0
    if m <= dense_limit:
        vals = sla.eigvalsh(a, check_finite=False)
        return float(max(abs(vals[0]), abs(vals[-1])))
    from scipy.sparse.linalg import eigsh

    v0 = np.random.default_rng(rng).standard_normal(m)
    vals = eigsh(a, k=1, which="LM", tol=tol, v0=v0, return_eigenvectors=False)
    return float(abs(vals[0]))


@dataclass(frozen=True)
class SparseLowerTriangular:
    """Compressed-row lower-triangular matrix with a positive diagonal."""

    indptr: np.ndarray
    indices: np.ndarray
    data: np.ndarray
    m: int
    _csr: object = field(default=None, repr=False, compare=False)

    def __post_init__(self):
        indptr = np.asarray(self.indptr, dtype=np.intp)
        indices = np.asarray(self.indices, dtype=np.intp)
        data = np.asarray(self.data, dtype=np.float64)
        if indptr.shape != (self.m + 1,) or indices.shape != data.shape:
            raise ArgumentError("inconsistent compressed-row arrays")
        for i in range(self.m):
            cols = indices[indptr[i]:indptr[i + 1]]
            if cols.size == 0 or cols[-1] != i or np.any(np.diff(cols) <= 0):
                raise ArgumentError(f"row {i} must have sorted columns ending at the diagonal")
            if not data[indptr[i + 1] - 1] > 0:
                raise ArgumentError(f"row {i} has a non-positive diagonal")
        csr = sp.csr_array((data, indices, indptr), shape=(self.m, self.m))
        object.__setattr__(self, "indptr", indptr)
        object.__setattr__(self, "indices", indices)
        object.__setattr__(self, "data", data)
        object.__setattr__(self, "_csr", csr)

    @classmethod
    def from_rows(cls, rows, values):
        """Build from per-row sorted column arrays and matching values."""
        m = len(rows)
        indptr = np.zeros(m + 1, dtype=np.intp)
        indptr[1:] = np.cumsum([r.size for r in rows])
        indices = np.concatenate(rows) if m else np.zeros(0, dtype=np.intp)
        data = np.concatenate(values) if m else np.zeros(0)
        return cls(indptr, indices, data, m)

    @property
    def nnz(self):
        return int(self.indptr[-1])

    @property
    def diagonal(self):
        return self.data[self.indptr[1:] - 1]

    def toarray(self):
        return self._csr.toarray()


def sparse_tri_apply(g, v, transpose=False):
    """``G v`` or ``G^T v`` in O(nnz)."""
    v = np.asarray(v, dtype=np.float64)
    if v.shape[0] != g.m:
        raise ArgumentError(f"vector length {v.shape[0]} does not match dimension {g.m}")
    return g._csr.T @ v if transpose else g._csr @ v


@dataclass
class SolveReport:
    """Outcome of one PCG run; ``rel_residual_history[0]`` is the initial residual."""

    iterations: int
    rel_residual_history: list
    converged: bool
    setup_seconds: float = 0.0
    solve_seconds: float = 0.0
    metadata: dict = field(default_factory=dict)

    @property
    def final_relres(self):
        return self.rel_residual_history[-1]


def _identity(r):
    return r.copy()


def pcg(apply_a, b, apply_minv=None, tol=1e-4, maxit=500, x0=None, callback=None):
    """Preconditioned conjugate gradient for an SPD operator.

    Convergence is declared when the true residual satisfies
    ``||b - A x|| <= tol ||b||``; the true residual is recomputed each
    iteration (one extra product with ``A``) while the search directions
    follow the usual recurrence.

    Parameters
    ----------
    apply_a, apply_minv : callable
        ``v -> A v`` and ``r -> M^{-1} r``; ``apply_minv=None`` means no
        preconditioner.
    callback : callable, optional
        Called as ``callback(iteration, x)`` after every update.

    Returns
    -------
    x : ndarray
    report : SolveReport
    """
    b = np.asarray(b, dtype=np.float64)
    apply_minv = apply_minv or _identity
    if not 0 < tol < 1:
        raise ArgumentError(f"tol must lie in (0, 1), got {tol}")
    t0 = time.perf_counter()
    bnorm = np.linalg.norm(b)
    x = np.zeros_like(b) if x0 is None else np.array(x0, dtype=np.float64)
    if bnorm == 0.0:
        return np.zeros_like(b), SolveReport(0, [0.0], True, solve_seconds=time.perf_counter() - t0)
    r = b - apply_a(x) if x0 is not None else b.copy()
    history = [np.linalg.norm(r) / bnorm]
    if history[0] <= tol:
        return x, SolveReport(0, history, True, solve_seconds=time.perf_counter() - t0)
    z = apply_minv(r)
    rz = r @ z
    if not rz > 0:
        raise NumericError("preconditioner is not positive definite (r^T M^{-1} r <= 0 at iteration 0)")
    p = z.copy()
    converged = False
    it = 0
    for it in range(1, maxit + 1):
        ap = apply_a(p)
        pap = p @ ap
        if not pap > 0:
            raise NumericError(f"CG breakdown: p^T A p = {pap:.3e} <= 0 at iteration {it}")
        alpha = rz / pap
        x += alpha * p
        r -= alpha * ap
        relres = np.linalg.norm(b - apply_a(x)) / bnorm
        history.append(relres)
        if callback is not None:
            callback(it, x)
        if relres <= tol:
            converged = True
            break
        z = apply_minv(r)
        rz_new = r @ z
        if rz_new == 0.0 and not np.any(r):
            break  # recurrence residual vanished; x cannot improve further
        if not rz_new > 0:
            raise NumericError(f"preconditioner is not positive definite at iteration {it}")
        p = z + (rz_new / rz) * p
        rz = rz_new
    return x, SolveReport(it, history, converged, solve_seconds=time.perf_counter() - t0)
