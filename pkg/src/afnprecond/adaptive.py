"""Nystrom rank estimation by subsampling, and the Nystrom-vs-AFN choice."""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field

import numpy as np
import scipy.linalg as sla

from .errors import ArgumentError
from .geometry import fps_sample
from .kernel import full_kernel
from .precond import (
    AFN_FSAI_NEIGHBORS,
    LANDMARK_CAP,
    build_afn,
    build_fps_nystrom,
    nystrom_error_curve,
)

ERROR_TOL = 0.1
EIG_THRESHOLD = 0.1
STRATEGY_THRESHOLD = 2000


class Choice(enum.Enum):
    AFN = "afn"
    NYSTROM = "nystrom"


@dataclass(frozen=True)
class RankEstimate:
    k_hat: int
    r_subsample: int
    m: int
    refined: bool
    error_curve: list = field(default_factory=list, repr=False)


@dataclass(frozen=True)
class StrategyChoice:
    chosen: Choice
    k_used: int
    estimate: RankEstimate
    threshold: int = STRATEGY_THRESHOLD


def default_subsample_size(n):
    return min(n, max(100, n // 100), 500)


def round_half_up(x):
    return int(math.floor(x + 0.5))


def estimate_rank(spec, ps, m=None, rng_seed=None, seed_index=None, tol=ERROR_TOL,
                  threshold=STRATEGY_THRESHOLD, eig_threshold=EIG_THRESHOLD, norm="spectral"):
    """Estimate the Nystrom rank of ``K`` that reaches relative error ``tol``.

    A uniform subsample of ``m`` points is shrunk by ``(m/n)^(1/d)`` so its
    kernel matrix mimics the spectral decay of the full one. FPS on the
    subsample gives nested Nystrom approximations; the first rank ``r`` with
    relative error below ``tol`` is rescaled to ``round(r n / m)``. Estimates
    below ``threshold`` are replaced by the number of eigenvalues above
    ``eig_threshold`` of the unscaled subsample kernel matrix (at least 1).

    Returns
    -------
    RankEstimate
    """
    n = ps.n
    m = default_subsample_size(n) if m is None else int(m)
    if not 2 <= m <= n:
        raise ArgumentError(f"subsample size must satisfy 2 <= m <= n = {n}, got {m}")
    rng = np.random.default_rng(rng_seed)
    sub_ids = np.sort(rng.choice(n, size=m, replace=False))
    sub = ps.subset(sub_ids)
    scaled = sub.scaled((m / n) ** (1.0 / ps.d))
    kmat = full_kernel(spec, scaled)
    order = fps_sample(scaled, m, seed_index).indices
    curve = nystrom_error_curve(kmat, order, norm=norm)
    r = next((rank for rank, err in curve if err < tol), m)
    k_hat = round_half_up(r * n / m)
    if k_hat >= threshold:
        return RankEstimate(k_hat, r, m, False, curve)
    eigs = sla.eigvalsh(full_kernel(spec, sub), check_finite=False)
    k_ref = max(1, int(np.count_nonzero(eigs > eig_threshold)))
    return RankEstimate(k_ref, r, m, True, curve)


def choose_preconditioner(spec, ps, m=None, rng_seed=None, overrides=None):
    """Pick AFN when the estimated rank reaches the threshold, else FPS-Nystrom.

    ``overrides`` may set ``k_hat`` (skip estimation), ``threshold`` and
    ``landmark_cap``. AFN uses ``min(landmark_cap, k_hat)`` landmarks.
    """
    overrides = dict(overrides or {})
    threshold = int(overrides.pop("threshold", STRATEGY_THRESHOLD))
    cap = int(overrides.pop("landmark_cap", LANDMARK_CAP))
    k_forced = overrides.pop("k_hat", None)
    if overrides:
        raise ArgumentError(f"unknown overrides: {sorted(overrides)}")
    if k_forced is not None:
        est = RankEstimate(int(k_forced), 0, 0, False, [])
    else:
        est = estimate_rank(spec, ps, m, rng_seed, threshold=threshold)
    if est.k_hat >= threshold:
        return StrategyChoice(Choice.AFN, max(1, min(cap, est.k_hat, ps.n - 1)), est, threshold)
    return StrategyChoice(Choice.NYSTROM, max(1, min(est.k_hat, ps.n)), est, threshold)


def build_chosen(choice, spec, ps, w=AFN_FSAI_NEIGHBORS, **kwargs):
    """Construct the preconditioner selected by :func:`choose_preconditioner`."""
    if choice.chosen is Choice.AFN:
        return build_afn(spec, ps, choice.k_used, w=w, **kwargs)
    return build_fps_nystrom(spec, ps, choice.k_used, **kwargs)
