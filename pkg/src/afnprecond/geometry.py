"""Point sets, farthest point sampling and the fill/separation distances.

All distances are Euclidean and computed from coordinate differences
(never through the ``|x|^2 + |y|^2 - 2 x.y`` expansion), so results are
reproducible and exactly zero for duplicate points.
"""

from __future__ import annotations

import enum
import itertools
import math
from dataclasses import dataclass, field

import numpy as np
from scipy.spatial.distance import cdist, pdist

from .errors import ArgumentError, SizeError

# Working-set bound (number of float64 entries) for blocked distance matrices.
_BLOCK_ENTRIES = 1 << 22

# Largest point set the exhaustive oracles accept.
BRUTE_FORCE_MAX_N = 16

# Constants from the unit-ball volume argument: for any k-subset of points in
# the unit ball of R^d, h >= C_FILL * k^(-1/d) and q <= c_sep(d) * k^(-1/d).
C_FILL = 1.0


def c_sep(d):
    """Separation-distance constant ``2^((d+1)/d)`` for the unit ball in R^d."""
    return 2.0 ** ((d + 1.0) / d)


class SamplingMethod(enum.Enum):
    FPS = "fps"
    UNIFORM_RANDOM = "uniform"


@dataclass(frozen=True)
class PointSet:
    """``n`` points in R^d; point ids are the row indices ``0..n-1``."""

    points: np.ndarray

    def __post_init__(self):
        pts = np.array(self.points, dtype=np.float64, copy=True)
        if pts.ndim == 1:
            pts = pts[:, None]
        if pts.ndim != 2 or pts.shape[0] < 1 or pts.shape[1] < 1:
            raise ArgumentError(f"need a non-empty (n, d) array, got shape {pts.shape}")
        if not np.all(np.isfinite(pts)):
            raise ArgumentError("point coordinates must be finite")
        pts.setflags(write=False)
        object.__setattr__(self, "points", pts)

    @property
    def n(self):
        return self.points.shape[0]

    @property
    def d(self):
        return self.points.shape[1]

    def __len__(self):
        return self.n

    def subset(self, ids):
        """New PointSet made of the given ids (renumbered 0..len(ids)-1)."""
        return PointSet(self.points[self._check_ids(ids)])

    def scaled(self, factor):
        return PointSet(self.points * factor)

    def _check_ids(self, ids):
        ids = np.asarray(ids, dtype=np.intp).ravel()
        if ids.size and (ids.min() < 0 or ids.max() >= self.n):
            raise ArgumentError(f"point ids must lie in [0, {self.n})")
        return ids


@dataclass(frozen=True)
class LandmarkSelection:
    """Ordered landmark ids plus the fill distance after each selection step.

    ``fill_trace[i]`` is the fill distance of the first ``i + 1`` landmarks,
    i.e. the distance of the point that would be picked next; the last entry
    is the fill distance of the whole selection.
    """

    indices: np.ndarray
    fill_trace: np.ndarray
    method: SamplingMethod = SamplingMethod.FPS

    def __post_init__(self):
        idx = np.asarray(self.indices, dtype=np.intp).copy()
        trace = np.asarray(self.fill_trace, dtype=np.float64).copy()
        if idx.ndim != 1 or trace.shape != idx.shape:
            raise ArgumentError("indices and fill_trace must be 1-D of equal length")
        if np.unique(idx).size != idx.size:
            raise ArgumentError("landmark ids must be distinct")
        idx.setflags(write=False)
        trace.setflags(write=False)
        object.__setattr__(self, "indices", idx)
        object.__setattr__(self, "fill_trace", trace)

    @property
    def k(self):
        return self.indices.size

    def __len__(self):
        return self.k

    def prefix(self, j):
        """The selection formed by the first ``j`` landmarks."""
        if not 1 <= j <= self.k:
            raise ArgumentError(f"prefix length must be in [1, {self.k}]")
        return LandmarkSelection(self.indices[:j], self.fill_trace[:j], self.method)


@dataclass(frozen=True)
class SparsityPattern:
    """Lower-triangular pattern over a point ordering.

    ``rows[i]`` holds sorted positions (into ``ordering``) of the nonzeros
    of row ``i``; the last entry of every row is ``i`` itself.
    """

    ordering: np.ndarray
    rows: list = field(repr=False)

    @property
    def m(self):
        return len(self.rows)

    @property
    def nnz(self):
        return int(sum(r.size for r in self.rows))

    def to_dense(self):
        mask = np.zeros((self.m, self.m), dtype=bool)
        for i, r in enumerate(self.rows):
            mask[i, r] = True
        return mask


def _as_ids(sel):
    if isinstance(sel, LandmarkSelection):
        return sel.indices
    return np.asarray(sel, dtype=np.intp).ravel()


def _dist_to(points, x):
    diff = points - x
    return np.sqrt(np.einsum("ij,ij->i", diff, diff))


def centroid_seed(ps):
    """Id of the point closest to the coordinate centroid (smallest id on ties)."""
    return int(np.argmin(_dist_to(ps.points, ps.points.mean(axis=0))))


def _greedy_trace(ps, first, k, pick):
    """Run a sequential selection keeping the O(n) distance-to-set array.

    ``pick(dist, step)`` returns the next id given the current distances,
    where already-selected entries are ``-inf``.
    """
    pts = ps.points
    dist = _dist_to(pts, pts[first])
    dist[first] = -np.inf
    chosen = [int(first)]
    trace = np.empty(k)
    for i in range(k):
        remaining_max = dist.max()
        trace[i] = max(remaining_max, 0.0) if np.isfinite(remaining_max) else 0.0
        if i == k - 1:
            break
        j = int(pick(dist, i))
        chosen.append(j)
        np.minimum(dist, _dist_to(pts, pts[j]), out=dist)
        dist[j] = -np.inf
    return np.asarray(chosen, dtype=np.intp), trace


def fps_sample(ps, k, seed_index=None):
    """Farthest point sampling.

    Parameters
    ----------
    ps : PointSet
    k : int
        Number of landmarks, ``1 <= k <= n``.
    seed_index : int, optional
        First landmark. Defaults to the point nearest the centroid.

    Returns
    -------
    LandmarkSelection
        Step ``i + 1`` picks the point maximizing the distance to the first
        ``i`` landmarks; ties go to the smallest id.
    """
    if not 1 <= k <= ps.n:
        raise ArgumentError(f"k must be in [1, {ps.n}], got {k}")
    if seed_index is None:
        seed_index = centroid_seed(ps)
    if not 0 <= seed_index < ps.n:
        raise ArgumentError(f"seed_index {seed_index} out of range [0, {ps.n})")
    idx, trace = _greedy_trace(ps, seed_index, k, lambda dist, _: np.argmax(dist))
    return LandmarkSelection(idx, trace, SamplingMethod.FPS)


def random_sample(ps, k, rng=None):
    """Uniformly random landmarks (without replacement), with their fill trace."""
    if not 1 <= k <= ps.n:
        raise ArgumentError(f"k must be in [1, {ps.n}], got {k}")
    rng = np.random.default_rng(rng)
    order = rng.permutation(ps.n)[:k]
    idx, trace = _greedy_trace(ps, order[0], k, lambda dist, step: order[step + 1])
    return LandmarkSelection(idx, trace, SamplingMethod.UNIFORM_RANDOM)


def fill_distance(ps, sel, domain=None):
    """Largest distance from a point of the domain to the landmark set.

    The domain defaults to the point set itself. ``domain`` may instead be an
    ``(p, d)`` array of probe points standing in for a continuous region.
    """
    ids = _as_ids(sel)
    if ids.size == 0:
        raise ArgumentError("fill distance needs a non-empty selection")
    ids = ps._check_ids(ids)
    land = ps.points[ids]
    probes = ps.points if domain is None else np.atleast_2d(np.asarray(domain, dtype=np.float64))
    if probes.shape[1] != ps.d:
        raise ArgumentError("domain probes must have the point-set dimension")
    if domain is None and ids.size == ps.n:
        return 0.0
    step = max(1, _BLOCK_ENTRIES // max(1, ids.size))
    h = 0.0
    for a in range(0, probes.shape[0], step):
        h = max(h, float(cdist(probes[a:a + step], land).min(axis=1).max()))
    return h


def separation_distance(ps, sel):
    """Smallest pairwise distance among the landmarks (k >= 2)."""
    ids = ps._check_ids(_as_ids(sel))
    if ids.size < 2:
        raise ArgumentError("separation distance needs at least two landmarks")
    return float(pdist(ps.points[ids]).min())


def _nearest_earlier(drow, count):
    """Positions of the ``count`` smallest entries, ties to smaller position."""
    if count >= drow.size:
        return np.arange(drow.size)
    part = np.argpartition(drow, count - 1)[:count]
    thresh = drow[part].max()
    strict = np.flatnonzero(drow < thresh)
    ties = np.flatnonzero(drow == thresh)[: count - strict.size]
    return np.concatenate([strict, ties])


def knn_pattern(ps, ordering, w):
    """Nearest-earlier-neighbor lower-triangular pattern.

    Row ``i`` (position in ``ordering``) holds ``i`` plus the ``min(w-1, i)``
    positions ``j < i`` whose points are closest to point ``ordering[i]``.
    """
    if w < 1:
        raise ArgumentError(f"pattern size w must be >= 1, got {w}")
    ordering = ps._check_ids(ordering)
    if np.unique(ordering).size != ordering.size:
        raise ArgumentError("ordering must not repeat point ids")
    pts = ps.points[ordering]
    m = pts.shape[0]
    rows = [np.array([0], dtype=np.intp)] if m else []
    if w == 1:
        rows = [np.array([i], dtype=np.intp) for i in range(m)]
        return SparsityPattern(ordering, rows)
    step = max(1, _BLOCK_ENTRIES // max(1, m))
    for a in range(1, m, step):
        b = min(m, a + step)
        block = cdist(pts[a:b], pts[:b])
        for i in range(a, b):
            near = _nearest_earlier(block[i - a, :i], min(w - 1, i))
            near.sort()
            rows.append(np.append(near, i).astype(np.intp))
    return SparsityPattern(ordering, rows)


def _check_brute(ps, k, kmin=1):
    if ps.n > BRUTE_FORCE_MAX_N:
        raise SizeError(f"exhaustive search limited to n <= {BRUTE_FORCE_MAX_N}, got {ps.n}")
    if not kmin <= k <= ps.n:
        raise ArgumentError(f"k must be in [{kmin}, {ps.n}], got {k}")


def brute_force_optimal_fill(ps, k):
    """Exhaustively find the k-subset with the smallest fill distance.

    Returns ``(subset_ids, h_star)``; the lexicographically first optimum wins.
    """
    _check_brute(ps, k)
    dmat = cdist(ps.points, ps.points)
    best, best_h = None, math.inf
    for combo in itertools.combinations(range(ps.n), k):
        h = dmat[:, combo].min(axis=1).max()
        if h < best_h:
            best, best_h = combo, h
    return np.asarray(best, dtype=np.intp), float(best_h)


def brute_force_optimal_separation(ps, k):
    """Exhaustively find the k-subset (k >= 2) with the largest separation distance."""
    _check_brute(ps, k, kmin=2)
    dmat = cdist(ps.points, ps.points)
    best, best_q = None, -math.inf
    for combo in itertools.combinations(range(ps.n), k):
        sub = dmat[np.ix_(combo, combo)]
        q = sub[np.triu_indices(k, 1)].min()
        if q > best_q:
            best, best_q = combo, q
    return np.asarray(best, dtype=np.intp), float(best_q)
