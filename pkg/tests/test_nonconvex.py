import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.optimize import brentq

from speedplan.certify import Verdict, certify_primal
from speedplan.nonconvex import brute_force, local_refine, repair
from speedplan.problem import Instance, check_feasible, objective
from speedplan.relaxation import solve_relaxation

from conftest import random_tiny


def test_feasible_start_is_returned_unchanged():
    inst = Instance(n=4, h=1.0, A=10.0, J=10.0, w_max=[0, 1, 1, 0])
    w = np.array([0.0, 1.0, 1.0, 0.0])
    res = local_refine(inst, w)
    assert res.iters == 0 and res.feasible
    assert np.array_equal(res.w, w) and res.objective == pytest.approx(2.0)


def test_dip_refined_value(dip_instance):
    # the only free sample is limited by its positive-jerk row:
    # 101 - (2 + rho) w <= 1 / sqrt(w); the optimum sits on the largest root
    rho = dip_instance.rho
    root = brentq(lambda w: 101.0 - (2.0 + rho) * w - 1.0 / np.sqrt(w), 1e-6, 1e-3, xtol=1e-18)
    expected = 0.1 + 1.0 / np.sqrt(root) + 1.0
    res = local_refine(dip_instance, solve_relaxation(dip_instance))
    assert res.feasible
    assert res.objective == pytest.approx(expected, rel=1e-6)
    assert 1.0 / np.sqrt(res.w[2]) == pytest.approx(100.9998, abs=1e-3)


def test_repair_only_lowers(dip_instance):
    rsol = solve_relaxation(dip_instance)
    w, ok = repair(dip_instance, rsol.w)
    assert ok and np.all(w <= rsol.w + 1e-15)
    assert check_feasible(dip_instance, w, 1e-9).feasible


@settings(max_examples=25)
@given(st.integers(0, 2**32 - 1))
def test_refine_feasible_and_above_relaxation(seed):
    rng = np.random.default_rng(seed)
    n = int(rng.integers(6, 30))
    inst = Instance(
        n=n, h=1.0, A=rng.uniform(0.1, 100.0), J=rng.uniform(0.01, 100.0, n - 2),
        w_max=np.r_[0.0, rng.uniform(0.01, 100.0, n - 2), 0.0],
    )
    rsol = solve_relaxation(inst)
    res = local_refine(inst, rsol)
    assert res.feasible
    assert check_feasible(inst, res.w, 1e-8).feasible
    # the relaxed value is only accurate to the interior point gap tolerance
    assert res.objective >= rsol.objective - 1e-7 * (1 + rsol.objective)
    assert all(b <= a for a, b in zip(res.history, res.history[1:]))


def test_brute_force_two_samples():
    inst = Instance(n=4, h=1.0, A=10.0, J=10.0, w_max=[0, 1, 1, 0])
    assert brute_force(inst, 50).objective == pytest.approx(2.0)


def test_brute_force_single_sample():
    M = 7.0
    inst = Instance(n=3, h=0.5, A=100.0, J=1e4, w_max=[0, M, 0])
    assert brute_force(inst, 50).objective == pytest.approx(0.5 / np.sqrt(M))


def test_brute_force_limits():
    inst = Instance(n=8, h=1.0, A=1.0, J=1.0, w_max=np.r_[0, np.ones(6), 0])
    with pytest.raises(ValueError):
        brute_force(inst)
    small = Instance(n=4, h=1.0, A=1.0, J=1.0, w_max=[0, 1, 1, 0])
    with pytest.raises(ValueError):
        brute_force(small, 1)


@settings(max_examples=25)
@given(st.integers(0, 2**32 - 1))
def test_brute_force_is_feasible_upper_bound(seed):
    inst = random_tiny(np.random.default_rng(seed))
    bf = brute_force(inst, 40)
    assert check_feasible(inst, bf.w, 0.0).feasible
    assert bf.objective == pytest.approx(objective(inst, bf.w))
    g = solve_relaxation(inst).objective
    assert bf.objective >= g - 1e-7 * g


def test_exact_relaxation_matches_brute_force():
    rng = np.random.default_rng(5)
    for _ in range(5):
        inst = random_tiny(rng)
        rsol = solve_relaxation(inst)
        if certify_primal(inst, rsol).verdict is Verdict.EXACT:
            bf = brute_force(inst, 100)
            assert rsol.objective == pytest.approx(bf.objective, rel=1e-3)


def test_repair_keeps_small_violation_local():
    # relaxed optimum with one 3e-4 positive-jerk violation; lowering the
    # violating sample itself used to cascade into a 5x slower profile
    from speedplan import bench

    inst = bench.generate_one(bench.GenSpec("rnd", "cnst", "rnd", n=200, seed=0, count=100), 94)
    rsol = solve_relaxation(inst)
    w, ok = repair(inst, rsol.w)
    assert ok and check_feasible(inst, w, 0.0).feasible
    assert objective(inst, w) <= rsol.objective * (1 + 1e-4)
