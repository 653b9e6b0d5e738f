import json

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from speedplan.problem import (
    Instance,
    InstanceError,
    check_feasible,
    delta_w,
    load_instance,
    objective,
    pair_accel,
    save_instance,
    scale,
)


def inst_n(n, h=1.0, A=10.0, J=1.0, rho=0.0, w_max=None):
    w_max = np.r_[0.0, np.full(n - 2, 100.0), 0.0] if w_max is None else w_max
    return Instance(n=n, h=h, A=A, J=J, w_max=w_max, rho=rho)


@pytest.mark.parametrize(
    "h, w, expected",
    [(1.0, [0, 4, 4, 0], 1.0), (1.0, [0, 1, 0], 1.0), (2.0, [0, 16, 4, 0], 1.5)],
)
def test_objective_examples(h, w, expected):
    assert objective(inst_n(len(w), h=h), w) == pytest.approx(expected)


def test_objective_rejects_zero_interior():
    with pytest.raises(ValueError):
        objective(inst_n(3), [0, 0, 0])


@pytest.mark.parametrize(
    "J, rho, w, expected",
    [(1.0, 0.0, [0, 1, 0], -2.0), (2.0, 0.0, [1, 1, 1], 0.0), (1.0, 0.01, [0, 1, 0], -2.01)],
)
def test_delta_w_examples(J, rho, w, expected):
    inst = Instance(n=3, h=1.0, A=10.0, J=J, w_max=[0, 10, 0], rho=rho)
    assert delta_w(inst, np.array(w, dtype=float), 1) == pytest.approx(expected)


def test_delta_w_index_range():
    inst = inst_n(4)
    for i in (0, 3):
        with pytest.raises(IndexError):
            delta_w(inst, np.zeros(4), i)


def test_delta_w_uses_own_jerk_bound():
    inst = Instance(n=5, h=1.0, A=10.0, J=[1.0, 4.0, 1.0], w_max=[0, 9, 9, 9, 0])
    w = np.array([0.0, 1.0, 5.0, 1.0, 0.0])
    assert delta_w(inst, w, 2) == pytest.approx((1 - 10 + 1) / 4.0)


def test_negative_jerk_violation():
    inst = Instance(n=3, h=1.0, A=10.0, J=1.0, w_max=[0, 10, 0])
    rep = check_feasible(inst, np.array([0.0, 4.0, 0.0]))
    assert rep.neg_jerk == pytest.approx(7.5)
    assert not rep.feasible


def test_zero_profile_is_feasible():
    rep = check_feasible(inst_n(5), np.zeros(5))
    assert rep.feasible and rep.worst <= 0


def test_feasible_example():
    inst = Instance(n=4, h=1.0, A=10.0, J=10.0, w_max=[0, 5, 5, 0])
    assert check_feasible(inst, np.array([0.0, 1.0, 1.0, 0.0])).feasible


def test_first_step_has_acceleration_row():
    inst = Instance(n=4, h=1.0, A=[2.0, 3.0], J=1e6, w_max=[0, 9, 9, 0])
    assert np.allclose(pair_accel(inst), [2.0, 2.0, 3.0])
    rep = check_feasible(inst, np.array([0.0, 2.5, 2.5, 0.0]))
    assert rep.accel == pytest.approx(0.5)


def test_bounds_violation_reported():
    inst = Instance(n=3, h=1.0, A=10.0, J=10.0, w_max=[0, 1, 0], w_min=[0, 0.5, 0])
    assert check_feasible(inst, np.array([0.0, 0.2, 0.0])).bounds == pytest.approx(0.3)
    assert check_feasible(inst, np.array([0.0, 1.5, 0.0])).bounds == pytest.approx(0.5)


@pytest.mark.parametrize(
    "kwargs",
    [
        dict(n=2, h=1.0, A=1.0, J=1.0, w_max=[0, 0]),
        dict(n=3, h=0.0, A=1.0, J=1.0, w_max=[0, 1, 0]),
        dict(n=3, h=1.0, A=-1.0, J=1.0, w_max=[0, 1, 0]),
        dict(n=3, h=1.0, A=1.0, J=0.0, w_max=[0, 1, 0]),
        dict(n=3, h=1.0, A=1.0, J=1.0, w_max=[1, 1, 0]),
        dict(n=3, h=1.0, A=1.0, J=1.0, w_max=[0, 1, 0], w_min=[0, 2, 0]),
        dict(n=3, h=1.0, A=1.0, J=1.0, w_max=[0, 1]),
        dict(n=3, h=1.0, A=1.0, J=1.0, w_max=[0, 1, 0], rho=-1.0),
    ],
)
def test_invalid_instances(kwargs):
    with pytest.raises(InstanceError):
        Instance(**kwargs)


def test_instance_json_roundtrip(tmp_path, dip_instance):
    f = tmp_path / "inst.json"
    save_instance(dip_instance, f)
    back = load_instance(f)
    assert back.to_dict() == dip_instance.to_dict()


def test_malformed_instance_file(tmp_path):
    f = tmp_path / "bad.json"
    f.write_text(json.dumps({"n": 3, "h": 1.0}))
    with pytest.raises(InstanceError):
        load_instance(f)
    f.write_text("{not json")
    with pytest.raises(InstanceError):
        load_instance(f)


def test_scale_identity():
    inst = inst_n(5, h=0.3, A=2.0, J=3.0)
    same, _ = scale(inst, 1.0)
    assert same.to_dict() == inst.to_dict()


def test_scale_example():
    inst = inst_n(5, h=0.5, A=2.0, J=4.0)
    out, _ = scale(inst, 2.0)
    assert out.h == 1.0 and np.allclose(out.A, 1.0) and np.allclose(out.J, 1.0)


def test_scale_rejects_zero():
    with pytest.raises(ValueError):
        scale(inst_n(4), 0.0)


@given(st.floats(0.1, 10.0), st.floats(0.05, 20.0))
def test_scale_roundtrip(h, r):
    inst = Instance(n=5, h=h, A=[1.0, 2.0, 3.0], J=[0.5, 4.0, 1.5], w_max=[0, 1, 2, 3, 0])
    back, _ = scale(scale(inst, r)[0], 1.0 / r)
    assert back.h == pytest.approx(h, rel=1e-15)
    assert np.allclose(back.A, inst.A, rtol=1e-15) and np.allclose(back.J, inst.J, rtol=1e-15)


@given(
    st.lists(st.floats(0.01, 100.0), min_size=1, max_size=8),
    st.integers(0, 7),
    st.floats(1e-6, 10.0),
)
def test_objective_strictly_decreasing(vals, idx, eps):
    w = np.array([0.0, *vals, 0.0])
    inst = inst_n(len(w), w_max=np.r_[0.0, np.full(len(vals), 200.0), 0.0])
    i = 1 + idx % len(vals)
    up = w.copy()
    up[i] += eps
    assert objective(inst, up) < objective(inst, w)
