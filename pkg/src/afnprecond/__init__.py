"""Preconditioners for regularized kernel systems ``(K + mu I) a = b``.

The adaptive factorized Nystrom (AFN) preconditioner, Nystrom preconditioners
with FPS or random landmarks, FSAI, farthest point sampling and a
subsampling-based rank estimate that picks between them.
"""

from .adaptive import Choice, choose_preconditioner, estimate_rank
from .errors import ArgumentError, FactorizationError, NumericError, ParseError, SizeError
from .geometry import (
    LandmarkSelection,
    PointSet,
    fill_distance,
    fps_sample,
    knn_pattern,
    random_sample,
    separation_distance,
)
from .kernel import KernelFamily, KernelOperator, KernelSpec, assemble_block, kernel_eval, matvec
from .linalg import cholesky, pcg, sym_eig
from .precond import (
    apply_afn_inv,
    apply_nystrom_inv,
    build_afn,
    build_fsai,
    build_fsai_plain,
    build_nystrom,
    build_ran,
    nystrom_error,
)

__version__ = "0.1.0"
