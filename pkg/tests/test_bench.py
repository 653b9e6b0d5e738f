import io

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from speedplan import bench
from speedplan.bench import FAMILIES, GenSpec, aggregate, generate_one, parse_families, parse_family
from speedplan.certify import Certificate, Verdict


def test_family_order_and_count():
    assert len(FAMILIES) == 18
    assert FAMILIES[0] == ("rnd", "cnst", "cnst") and FAMILIES[-1] == ("pw_lin", "reg", "rnd")
    assert FAMILIES[3] == ("rnd", "rnd", "cnst")


def test_parse_family_spellings():
    assert parse_family("pw_cnst-reg-rnd") == ("pw_cnst", "reg", "rnd")
    assert parse_family("pwcnst-reg-rnd") == ("pw_cnst", "reg", "rnd")
    assert parse_family("PW-LIN-cnst-cnst") == ("pw_lin", "cnst", "cnst")
    assert parse_families("all") == list(FAMILIES)
    assert parse_families("rnd-cnst-cnst, pw_lin-rnd-rnd") == [("rnd", "cnst", "cnst"), ("pw_lin", "rnd", "rnd")]
    with pytest.raises(ValueError):
        parse_family("rnd-cnst")
    with pytest.raises(ValueError):
        parse_family("rnd-reg-reg")


def test_spec_validation():
    with pytest.raises(ValueError):
        GenSpec("pw_cnst", "cnst", "cnst", n=105)
    with pytest.raises(ValueError):
        GenSpec("rnd", "cnst", "cnst", seed=-1)
    GenSpec("rnd", "cnst", "cnst", n=105)


def test_generation_is_deterministic_and_indexable():
    spec = GenSpec("pw_lin", "reg", "rnd", n=50, seed=3, count=4)
    a, b = bench.generate(spec), bench.generate(spec)
    for x, y in zip(a, b):
        assert np.array_equal(x.w_max, y.w_max) and np.array_equal(x.A, y.A) and np.array_equal(x.J, y.J)
    assert np.array_equal(generate_one(spec, 2).w_max, a[2].w_max)
    other = generate_one(GenSpec("pw_lin", "reg", "rnd", n=50, seed=4, count=4), 2)
    assert not np.array_equal(other.w_max, a[2].w_max)


@settings(max_examples=30)
@given(st.sampled_from(FAMILIES), st.integers(0, 2**63), st.integers(0, 50))
def test_generated_ranges(fam, seed, k):
    inst = generate_one(GenSpec(*fam, n=60, seed=seed, count=k + 1), k)
    w = inst.w_max
    assert w[0] == 0 and w[-1] == 0
    lo = bench.W_PWLIN_RANGE[0] if fam[0] == "pw_lin" else bench.W_RANGE[0]
    assert np.all((w[1:-1] >= lo) & (w[1:-1] <= 100.0))
    assert np.all((inst.A >= 0.1) & (inst.A <= 100.0))
    assert np.all((inst.J >= 0.01) & (inst.J <= 100.0))
    if fam[1] == "cnst":
        assert np.all(inst.A == inst.A[0])
    if fam[2] == "cnst":
        assert np.all(inst.J == inst.J[0])
    if fam[0] == "pw_cnst":
        assert len(np.unique(w[1:-1])) <= 10
    if fam[1] == "reg":
        band = inst.h * inst.J[:-1] / w[1:-2]
        # rounding scales with A itself, not with the (possibly tiny) band
        assert np.all(np.abs(np.diff(inst.A)) <= band + 1e-12 * inst.A[:-1])


def test_reg_band_example():
    # hJ / w_max = 1 * 5 / 10 = 0.5 everywhere, so consecutive A differ by at most 0.5
    rng = np.random.default_rng(0)
    A = bench._accel(rng, "reg", 50, 1.0, np.full(50, 5.0), np.full(50, 10.0))
    assert np.max(np.abs(np.diff(A))) <= 0.5 + 1e-12


def record(verdict, jerk=0.0, gap=None, lb=1.0, ub=1.0):
    cert = Certificate(verdict, lower_bound=lb, upper_bound=ub)
    return bench.InstanceRecord("rnd-cnst-cnst", 0, 0, cert, jerk, gap, 0.1, "optimal")


def test_aggregate_all_exact_has_na_gaps():
    row = aggregate(("rnd", "cnst", "cnst"), [record(Verdict.EXACT) for _ in range(3)])
    assert row.non_exact == 0 and row.max_gap_pct is None and row.mean_gap_pct is None
    line = bench.table_csv([row]).splitlines()[1]
    assert line == "rnd,cnst,cnst,0,0,0,N/A,N/A"


def test_aggregate_means_over_all_instances():
    recs = [record(Verdict.EXACT), record(Verdict.INEXACT, 0.3, 2.0, 1.0, 1.02), record(Verdict.INEXACT, 0.1, 1.0)]
    row = aggregate(("pw_cnst", "rnd", "cnst"), recs)
    assert row.non_exact == 2
    assert row.max_jerk_err == 0.3 and row.mean_jerk_err == pytest.approx(0.4 / 3)
    assert row.max_gap_pct == 2.0 and row.mean_gap_pct == pytest.approx(1.0)
    assert bench.table_csv([row]).splitlines()[1].startswith("pw cnst,rnd,cnst,2,")


def test_run_table_log_roundtrip_and_determinism():
    specs = [GenSpec("rnd", "cnst", "cnst", n=30, seed=1, count=3), GenSpec("pw_cnst", "rnd", "rnd", n=30, seed=1, count=3)]
    log1, log2 = io.StringIO(), io.StringIO()
    rows1 = bench.run_table(specs, log=log1)
    rows2 = bench.run_table(specs, log=log2)
    assert bench.table_csv(rows1) == bench.table_csv(rows2)
    log1.seek(0)
    recs = list(bench.read_log(log1))
    assert len(recs) == 6 and recs[3].family == "pw_cnst-rnd-rnd"
    assert aggregate(specs[0].labels, recs[:3]) == rows1[0]
    assert "Mean time [s]" in bench.table_text(rows1)


def test_worker_count(monkeypatch):
    monkeypatch.delenv("PLANNER_THREADS", raising=False)
    assert bench.worker_count() == 1
    monkeypatch.setenv("PLANNER_THREADS", "3")
    assert bench.worker_count() == 3
    monkeypatch.setenv("PLANNER_THREADS", "zero")
    assert bench.worker_count() == 1


def test_parallel_matches_serial():
    spec = GenSpec("rnd", "rnd", "cnst", n=30, seed=2, count=4)
    serial = bench.run_family(spec, workers=1)
    par = bench.run_family(spec, workers=2)
    assert [r.certificate for r in serial] == [r.certificate for r in par]
