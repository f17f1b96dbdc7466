"""Kernel functions, dense kernel blocks and blocked kernel matrix-vector products."""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass

import numpy as np

from .errors import ArgumentError
from .geometry import PointSet

SQRT3 = math.sqrt(3.0)

# Default working set (float64 entries) for one block of kernel evaluations.
_BLOCK_ENTRIES = 1 << 21


class KernelFamily(enum.Enum):
    GAUSSIAN = "gaussian"
    MATERN32 = "matern32"
    INVERSE_MULTIQUADRIC = "imq"

    @classmethod
    def parse(cls, name):
        key = str(name).strip().lower().replace("-", "").replace("_", "")
        aliases = {
            "gaussian": cls.GAUSSIAN, "rbf": cls.GAUSSIAN, "sqexp": cls.GAUSSIAN,
            "matern32": cls.MATERN32, "matern": cls.MATERN32,
            "imq": cls.INVERSE_MULTIQUADRIC, "inversemultiquadric": cls.INVERSE_MULTIQUADRIC,
        }
        try:
            return aliases[key]
        except KeyError:
            raise ArgumentError(f"unknown kernel family {name!r}") from None


@dataclass(frozen=True)
class KernelSpec:
    """Kernel family, its parameters and the regularization ``mu``.

    Gaussian: ``exp(-r^2 / l^2)``; Matern-3/2: ``(1 + sqrt(3) r / l) exp(-sqrt(3) r / l)``;
    inverse multiquadric: ``(c^2 + r^2)^(-p/2)`` (``l`` unused).
    ``mu`` is carried along but never added by this module.
    """

    family: KernelFamily = KernelFamily.GAUSSIAN
    length_scale: float = 1.0
    imq_c: float = 1.0
    imq_p: float = 1.0
    mu: float = 0.0

    def __post_init__(self):
        if not isinstance(self.family, KernelFamily):
            object.__setattr__(self, "family", KernelFamily.parse(self.family))
        if not self.length_scale > 0:
            raise ArgumentError(f"length scale must be positive, got {self.length_scale}")
        if self.family is KernelFamily.INVERSE_MULTIQUADRIC and not self.imq_p > 0:
            raise ArgumentError(f"inverse multiquadric exponent p must be positive, got {self.imq_p}")
        if not self.mu >= 0:
            raise ArgumentError(f"regularization mu must be non-negative, got {self.mu}")

    @classmethod
    def gaussian(cls, l2, mu=0.0):
        """Gaussian kernel parametrized by the squared length scale."""
        return cls(KernelFamily.GAUSSIAN, math.sqrt(l2), mu=mu)

    @classmethod
    def matern32(cls, length_scale, mu=0.0):
        return cls(KernelFamily.MATERN32, length_scale, mu=mu)

    @classmethod
    def imq(cls, c=1.0, p=1.0, mu=0.0):
        return cls(KernelFamily.INVERSE_MULTIQUADRIC, 1.0, imq_c=c, imq_p=p, mu=mu)

    def with_mu(self, mu):
        return KernelSpec(self.family, self.length_scale, self.imq_c, self.imq_p, mu)

    @property
    def diagonal(self):
        """Value of ``k(x, x)``."""
        if self.family is KernelFamily.INVERSE_MULTIQUADRIC:
            return float((self.imq_c ** 2) ** (-self.imq_p / 2.0))
        return 1.0

    def _scale(self, pts):
        # Gaussian/Matern see coordinates divided by l, so a kernel on
        # (x, l) is bitwise the kernel on (x / l, 1).
        if self.family is KernelFamily.INVERSE_MULTIQUADRIC:
            return pts
        return pts / self.length_scale

    def _from_sqdist(self, r2):
        if self.family is KernelFamily.GAUSSIAN:
            return np.exp(-r2)
        if self.family is KernelFamily.MATERN32:
            s = SQRT3 * np.sqrt(r2)
            return (1.0 + s) * np.exp(-s)
        return (self.imq_c ** 2 + r2) ** (-self.imq_p / 2.0)


@dataclass(frozen=True)
class KernelBlock:
    rows: np.ndarray
    cols: np.ndarray
    values: np.ndarray

    @property
    def shape(self):
        return self.values.shape


def _sqdist(a, b):
    """Pairwise squared distances from explicit coordinate differences."""
    out = np.zeros((a.shape[0], b.shape[0]))
    for j in range(a.shape[1]):
        diff = a[:, j, None] - b[None, :, j]
        out += diff * diff
    return out


def kernel_eval(spec, x, y):
    """Kernel value for two points of equal dimension."""
    x = np.atleast_1d(np.asarray(x, dtype=np.float64))
    y = np.atleast_1d(np.asarray(y, dtype=np.float64))
    if x.shape != y.shape or x.ndim != 1:
        raise ArgumentError(f"points must be 1-D of equal dimension, got {x.shape} and {y.shape}")
    r2 = _sqdist(spec._scale(x[None, :]), spec._scale(y[None, :]))
    return float(spec._from_sqdist(r2)[0, 0])


def kernel_matrix(spec, a, b=None):
    """Dense kernel matrix between coordinate arrays ``a`` (p, d) and ``b`` (q, d)."""
    a = spec._scale(np.atleast_2d(np.asarray(a, dtype=np.float64)))
    b = a if b is None else spec._scale(np.atleast_2d(np.asarray(b, dtype=np.float64)))
    if a.shape[1] != b.shape[1]:
        raise ArgumentError("dimension mismatch between point arrays")
    return spec._from_sqdist(_sqdist(a, b))


def assemble_block(spec, ps, rows, cols=None):
    """Kernel block ``K[rows, cols]`` (no regularization added)."""
    rows = ps._check_ids(rows)
    cols = rows if cols is None else ps._check_ids(cols)
    values = kernel_matrix(spec, ps.points[rows], ps.points[cols])
    return KernelBlock(rows, cols, values)


def full_kernel(spec, ps):
    """The whole ``n x n`` kernel matrix."""
    return kernel_matrix(spec, ps.points)


def matvec(spec, ps, v, block_size=None):
    """``K @ v`` evaluated in row blocks, never materializing ``K``.

    The result depends only on ``block_size`` (fixed summation order).
    """
    v = np.asarray(v, dtype=np.float64)
    if v.shape[0] != ps.n:
        raise ArgumentError(f"vector length {v.shape[0]} does not match n = {ps.n}")
    if block_size is None:
        block_size = max(1, _BLOCK_ENTRIES // ps.n)
    if block_size < 1:
        raise ArgumentError("block_size must be positive")
    pts = spec._scale(ps.points)
    out = np.empty_like(v)
    for a in range(0, ps.n, block_size):
        blk = spec._from_sqdist(_sqdist(pts[a:a + block_size], pts))
        out[a:a + block_size] = blk @ v
    return out


class KernelOperator:
    """``v -> (K + shift I) v`` for a point set.

    Keeps a dense copy of ``K`` when it fits ``memory_bytes``; otherwise
    falls back to blocked recomputation on every product.
    """

    def __init__(self, spec, ps, shift=None, memory_bytes=2 << 30, block_size=None):
        self.spec = spec
        self.ps = ps
        self.shift = spec.mu if shift is None else shift
        self.block_size = block_size
        self.matrix = None
        if 8 * ps.n * ps.n <= memory_bytes:
            self.matrix = full_kernel(spec, ps)
        self.n_products = 0

    @property
    def n(self):
        return self.ps.n

    def __call__(self, v):
        self.n_products += 1
        if self.matrix is not None:
            kv = self.matrix @ v
        else:
            kv = matvec(self.spec, self.ps, v, self.block_size)
        return kv + self.shift * v

    def dense(self):
        """Dense ``K + shift I`` (materialized on demand)."""
        mat = self.matrix if self.matrix is not None else full_kernel(self.spec, self.ps)
        return mat + self.shift * np.eye(self.n)
