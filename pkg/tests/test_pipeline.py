import numpy as np
import pytest

from speedplan import Verdict, plan
from speedplan.conic import SolverOptions
from speedplan.problem import Instance, check_feasible, objective

from conftest import random_tiny


def test_exact_plan_returns_relaxed_profile():
    inst = random_tiny(np.random.default_rng(4), n=25)
    res = plan(inst)
    assert res.certificate.verdict is Verdict.EXACT
    assert res.refined is None
    assert np.array_equal(res.w, res.relaxed.w)
    assert res.objective == pytest.approx(res.relaxed.objective)


def test_inexact_plan_brackets_optimum(dip_instance):
    res = plan(dip_instance)
    cert = res.certificate
    assert cert.verdict is Verdict.INEXACT and cert.method == "refined"
    assert check_feasible(dip_instance, res.w, 1e-8).feasible
    assert cert.upper_bound == pytest.approx(objective(dip_instance, res.w))
    assert cert.lower_bound < cert.upper_bound
    assert cert.gap_rel == pytest.approx((cert.upper_bound - cert.lower_bound) / cert.lower_bound)


def test_solver_failure_is_unknown():
    inst = random_tiny(np.random.default_rng(4), n=25)
    res = plan(inst, solver=SolverOptions(max_iters=2))
    assert res.certificate.verdict is Verdict.UNKNOWN and res.w is None


def test_infeasible_floor_is_unknown():
    # the floor forces a jump the acceleration bound forbids
    inst = Instance(n=4, h=1.0, A=1.0, J=100.0, w_max=[0, 50, 50, 0], w_min=[0, 40, 0, 0])
    res = plan(inst)
    assert res.certificate.verdict is Verdict.UNKNOWN
