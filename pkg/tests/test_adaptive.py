import numpy as np
import pytest

from afnprecond.adaptive import (
    Choice,
    build_chosen,
    choose_preconditioner,
    default_subsample_size,
    estimate_rank,
    round_half_up,
)
from afnprecond.errors import ArgumentError
from afnprecond.geometry import PointSet
from afnprecond.kernel import KernelSpec
from afnprecond.precond import AfnFactors, NystromPreconditioner


def cube(n, edge, seed=0, d=3):
    return PointSet(np.random.default_rng(seed).uniform(0, edge, size=(n, d)))


def test_default_subsample_size():
    assert default_subsample_size(50) == 50
    assert default_subsample_size(1000) == 100
    assert default_subsample_size(30000) == 300
    assert default_subsample_size(10 ** 6) == 500


def test_round_half_up():
    assert [round_half_up(x) for x in (0.5, 1.5, 2.5, 2.49)] == [1, 2, 3, 2]


class TestEstimateRank:
    def test_flat_kernel_rank_one(self):
        est = estimate_rank(KernelSpec(length_scale=1e6), cube(500, 8.0), m=100, rng_seed=0)
        assert est.refined and est.k_hat == 1 and est.r_subsample == 1

    def test_identity_limit_coarse(self):
        ps = cube(2000, 2000 ** (1 / 3))
        est = estimate_rank(KernelSpec(length_scale=1e-6), ps, m=100, rng_seed=0)
        assert est.r_subsample == 100 and est.k_hat == 2000 and not est.refined

    def test_identity_limit_refined(self):
        est = estimate_rank(KernelSpec(length_scale=1e-6), cube(500, 8.0), m=50, rng_seed=0)
        assert est.refined and est.k_hat == 50

    def test_unrefined_k_hat_is_rescaled_r(self):
        ps = cube(1000, 10.0, seed=1)
        est = estimate_rank(KernelSpec(length_scale=5.0), ps, m=100, rng_seed=3, threshold=0)
        assert not est.refined
        assert est.k_hat == round_half_up(est.r_subsample * 1000 / 100)
        assert 1 <= est.r_subsample <= est.m == 100
        assert est.error_curve[est.r_subsample - 1][1] < 0.1
        assert all(e >= 0.1 for _, e in est.error_curve[: est.r_subsample - 1])

    def test_refined_bounded_by_m(self):
        est = estimate_rank(KernelSpec(length_scale=2.0), cube(1000, 10.0), m=100, rng_seed=0)
        assert est.refined and 1 <= est.k_hat <= 100

    def test_deterministic(self):
        ps = cube(800, 9.0, seed=2)
        spec = KernelSpec.gaussian(20.0)
        a = estimate_rank(spec, ps, 80, rng_seed=11)
        b = estimate_rank(spec, ps, 80, rng_seed=11)
        assert a == b and a.error_curve == b.error_curve

    @pytest.mark.parametrize("m", [1, 101])
    def test_bad_m(self, m):
        with pytest.raises(ArgumentError):
            estimate_rank(KernelSpec(), cube(100, 4.0), m=m)

    def test_monotone_in_length_scale(self):
        ps = cube(1000, 10.0, seed=4)
        medians = []
        for length in (1.0, 2.0, 5.0, 10.0):
            ks = [estimate_rank(KernelSpec(length_scale=length), ps, 100, s).k_hat for s in range(5)]
            medians.append(np.median(ks))
        assert all(a >= b for a, b in zip(medians, medians[1:]))


class TestChoice:
    @pytest.mark.parametrize("k_hat,chosen", [(565, Choice.NYSTROM), (9600, Choice.AFN),
                                              (178, Choice.NYSTROM), (1999, Choice.NYSTROM),
                                              (2000, Choice.AFN)])
    def test_branch(self, k_hat, chosen):
        ps = cube(30000, 10.0) if k_hat >= 2000 else cube(3000, 10.0)
        c = choose_preconditioner(KernelSpec(), ps, overrides={"k_hat": k_hat})
        assert c.chosen is chosen
        assert c.k_used == (min(2000, k_hat) if chosen is Choice.AFN else k_hat)

    def test_afn_capped_below_n(self):
        c = choose_preconditioner(KernelSpec(), cube(100, 3.0), overrides={"k_hat": 5000, "threshold": 10})
        assert c.chosen is Choice.AFN and c.k_used == 99

    def test_custom_cap(self):
        c = choose_preconditioner(KernelSpec(), cube(500, 3.0),
                                  overrides={"k_hat": 300, "threshold": 100, "landmark_cap": 50})
        assert c.k_used == 50 and c.threshold == 100

    def test_unknown_override(self):
        with pytest.raises(ArgumentError):
            choose_preconditioner(KernelSpec(), cube(10, 1.0), overrides={"kk": 3})

    def test_build_chosen(self):
        ps = cube(300, 6.0, seed=5)
        spec = KernelSpec.gaussian(4.0, mu=1e-3)
        nys = choose_preconditioner(spec, ps, overrides={"k_hat": 30})
        afn = choose_preconditioner(spec, ps, overrides={"k_hat": 30, "threshold": 20})
        assert isinstance(build_chosen(nys, spec, ps), NystromPreconditioner)
        f = build_chosen(afn, spec, ps, w=10)
        assert isinstance(f, AfnFactors) and f.k == 30

    def test_estimate_attached(self):
        ps = cube(400, 7.0, seed=6)
        c = choose_preconditioner(KernelSpec.gaussian(100.0, 1e-4), ps, rng_seed=0)
        assert c.estimate.m == 100 and c.k_used == c.estimate.k_hat
