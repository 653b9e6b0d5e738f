import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from speedplan import bench
from speedplan.certify import (
    Certificate,
    Verdict,
    ceiling_excess,
    ceiling_precheck,
    certify_primal,
    structure_checks,
)
from speedplan.conic import Status
from speedplan.problem import Instance, objective
from speedplan.relaxation import RelaxedSolution, recover_t_tight, solve_relaxation

from conftest import random_tiny


def fake_solution(inst, w, status=Status.OPTIMAL):
    t = recover_t_tight(inst, w)
    z = np.zeros(inst.m)
    return RelaxedSolution(w=np.asarray(w, float), t=t, x1=z, x2=z, objective=float(t.sum()),
                           status=status, iters=0, gap=0.0, residual_primal=0.0, residual_dual=0.0)


def test_feasible_point_is_exact():
    inst = Instance(n=4, h=1.0, A=10.0, J=10.0, w_max=[0, 1, 1, 0])
    cert = certify_primal(inst, fake_solution(inst, [0.0, 1.0, 1.0, 0.0]))
    assert cert.verdict is Verdict.EXACT
    assert cert.gap_rel == 0.0 and cert.upper_bound == cert.lower_bound == pytest.approx(2.0)


def test_random_constant_bounds_exact():
    rng = np.random.default_rng(3)
    for _ in range(10):
        inst = random_tiny(rng, n=30)
        assert certify_primal(inst, solve_relaxation(inst)).verdict is Verdict.EXACT


def test_dip_inexact(dip_instance):
    cert = certify_primal(dip_instance, solve_relaxation(dip_instance))
    assert cert.verdict is Verdict.INEXACT
    assert cert.inexact_indices == [2]
    assert math.isinf(cert.upper_bound) and cert.gap_rel is None


def test_variable_jerk_bench_instance_inexact():
    # found by scanning the generator; the violation is a positive-jerk row
    inst = bench.generate_one(bench.GenSpec("pw_cnst", "rnd", "rnd", n=200, seed=7, count=20), 5)
    cert = certify_primal(inst, solve_relaxation(inst))
    assert cert.verdict is Verdict.INEXACT and cert.violations


def test_failed_solve_is_unknown():
    inst = Instance(n=4, h=1.0, A=10.0, J=10.0, w_max=[0, 1, 1, 0])
    cert = certify_primal(inst, fake_solution(inst, [0.0, 1.0, 1.0, 0.0], Status.ITER_LIMIT))
    assert cert.verdict is Verdict.UNKNOWN


def test_certificate_roundtrip():
    cert = Certificate(Verdict.INEXACT, lower_bound=1.0, upper_bound=1.5, max_pos_jerk_viol=0.2,
                       violations=((3, 0.2),), method="refined")
    back = Certificate.from_dict(cert.to_dict())
    assert back == cert
    open_cert = Certificate(Verdict.INEXACT, lower_bound=1.0)
    assert Certificate.from_dict(open_cert.to_dict()) == open_cert
    assert open_cert.to_dict()["upper_bound"] is None


def test_certificate_rejects_inverted_bounds():
    with pytest.raises(ValueError):
        Certificate(Verdict.INEXACT, lower_bound=2.0, upper_bound=1.0)


def test_structure_flags_on_ceiling_violation():
    # a positive-jerk violation sitting exactly on the ceiling is allowed
    inst = Instance(n=5, h=1.0, A=100.0, J=1.0, w_max=[0, 9, 1, 9, 0])
    rep = structure_checks(inst, np.array([0.0, 9.0, 1.0, 9.0, 0.0]))
    assert rep.pos_viol_at_ceiling and 2 not in rep.pos_off_ceiling


def test_structure_flags_negative_violation():
    inst = Instance(n=5, h=1.0, A=100.0, J=1.0, w_max=[0, 9, 9, 9, 0])
    rep = structure_checks(inst, np.array([0.0, 1.0, 9.0, 1.0, 0.0]))
    assert not rep.neg_jerk_clean and 2 in rep.neg_violations


def test_precheck_flat_ceiling():
    inst = Instance(n=8, h=1.0, A=1.0, J=1.0, w_max=np.r_[0, np.full(6, 50.0), 0])
    assert ceiling_precheck(inst)


def test_precheck_spike():
    M, J = 20.0, 1.0
    w_max = np.r_[0.0, M, 1.0, 1.0, 1.0, 0.0]
    inst = Instance(n=6, h=1.0, A=1.0, J=J, w_max=w_max)
    # by hand: (M - 2 + 1) / J = 19 > 1 / sqrt(1) at the sample after the spike
    excess = ceiling_excess(inst)
    assert excess[1] == pytest.approx(19.0 - 1.0)
    assert not ceiling_precheck(inst)


def test_precheck_gentle_piecewise_linear():
    w_max = np.interp(np.arange(40), [0, 10, 25, 39], [20.0, 25.0, 22.0, 30.0])
    w_max[0] = w_max[-1] = 0.0
    inst = Instance(n=40, h=1.0, A=1.0, J=100.0, w_max=w_max)
    assert ceiling_precheck(inst)


@settings(max_examples=40)
@given(st.integers(0, 2**32 - 1), st.sampled_from([0.0, 1e-3]))
def test_sign_pattern_on_base_class(seed, rho):
    inst = random_tiny(np.random.default_rng(seed), n=20).replace(rho=rho)
    rep = structure_checks(inst, solve_relaxation(inst))
    assert rep.ok, rep


@settings(max_examples=40)
@given(st.integers(0, 2**32 - 1), st.floats(0.5, 100.0))
def test_precheck_implies_exact(seed, J):
    rng = np.random.default_rng(seed)
    knots = rng.uniform(1.0, 100.0, 4)
    w_max = np.interp(np.arange(30), np.linspace(0, 29, 4), knots)
    w_max[0] = w_max[-1] = 0.0
    inst = Instance(n=30, h=1.0, A=rng.uniform(0.1, 100.0), J=J, w_max=w_max)
    if ceiling_precheck(inst):
        assert certify_primal(inst, solve_relaxation(inst)).verdict is Verdict.EXACT


@settings(max_examples=20)
@given(st.integers(0, 2**32 - 1))
def test_exact_bounds_bracket_objective(seed):
    inst = random_tiny(np.random.default_rng(seed), n=15)
    rsol = solve_relaxation(inst)
    cert = certify_primal(inst, rsol)
    if cert.exact:
        assert objective(inst, rsol.w) == pytest.approx(cert.lower_bound, rel=1e-6)
