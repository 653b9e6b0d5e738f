"""Random instance families and the exactness/gap benchmark table."""

from __future__ import annotations

import concurrent.futures as cf
import csv
import dataclasses
import io
import itertools
import json
import math
import os
from pathlib import Path
from typing import Iterable, Iterator, Sequence

import numpy as np

from .certify import Certificate, Verdict
from .pipeline import plan
from .problem import Instance

W_STRATEGIES = ("rnd", "pw_cnst", "pw_lin")
A_STRATEGIES = ("cnst", "rnd", "reg")
J_STRATEGIES = ("cnst", "rnd")

# table order: J slowest, then A, then W
FAMILIES = tuple((w, a, j) for j in J_STRATEGIES for a in A_STRATEGIES for w in W_STRATEGIES)

W_RANGE = (0.01, 100.0)
W_PWLIN_RANGE = (0.1, 100.0)
A_RANGE = (0.1, 100.0)
J_RANGE = (0.01, 100.0)


@dataclasses.dataclass(frozen=True)
class GenSpec:
    w_strategy: str
    a_strategy: str
    j_strategy: str
    n: int = 1000
    h: float = 1.0
    seed: int = 0
    count: int = 1000

    def __post_init__(self):
        if self.w_strategy not in W_STRATEGIES:
            raise ValueError(f"unknown w_max strategy {self.w_strategy!r}")
        if self.a_strategy not in A_STRATEGIES:
            raise ValueError(f"unknown A strategy {self.a_strategy!r}")
        if self.j_strategy not in J_STRATEGIES:
            raise ValueError(f"unknown J strategy {self.j_strategy!r}")
        if self.n < 3 or self.count < 0 or not self.h > 0:
            raise ValueError("need n >= 3, count >= 0 and h > 0")
        if self.w_strategy != "rnd" and self.n % 10:
            raise ValueError(f"piecewise strategies need n divisible by 10, got {self.n}")
        if not 0 <= self.seed < 2**64:
            raise ValueError("seed must be a 64-bit unsigned integer")

    @property
    def labels(self) -> tuple[str, str, str]:
        return (self.w_strategy, self.a_strategy, self.j_strategy)

    @property
    def name(self) -> str:
        return "-".join(self.labels)

    @property
    def family_index(self) -> int:
        return FAMILIES.index(self.labels)


def parse_family(name: str) -> tuple[str, str, str]:
    """``"pw_cnst-reg-rnd"`` (also ``pwcnst``/``pw-cnst`` spellings) to labels."""
    key = name.strip().lower().replace("pw-", "pw_").replace("pw ", "pw_")
    key = key.replace("pwcnst", "pw_cnst").replace("pwlin", "pw_lin")
    parts = key.split("-")
    if len(parts) != 3 or tuple(parts) not in FAMILIES:
        raise ValueError(f"unknown family {name!r}; expected W-A-J, e.g. rnd-cnst-cnst")
    return tuple(parts)  # type: ignore[return-value]


def parse_families(arg: str) -> list[tuple[str, str, str]]:
    if arg.strip().lower() == "all":
        return list(FAMILIES)
    return [parse_family(p) for p in arg.split(",") if p.strip()]


def instance_rng(spec: GenSpec, k: int) -> np.random.Generator:
    """Counter-based Philox stream for instance ``k`` of a family.

    The stream key is ``(seed, family index, k)``, so any instance can be
    regenerated alone and families do not share draws.
    """
    ss = np.random.SeedSequence(spec.seed, spawn_key=(spec.family_index, k))
    return np.random.Generator(np.random.Philox(ss))


def _w_max(rng: np.random.Generator, strategy: str, n: int) -> np.ndarray:
    if strategy == "rnd":
        w = rng.uniform(*W_RANGE, size=n)
    elif strategy == "pw_cnst":
        w = np.repeat(rng.uniform(*W_RANGE, size=10), n // 10)
    else:
        knots = np.linspace(0, n - 1, 11)
        w = np.interp(np.arange(n), knots, rng.uniform(*W_PWLIN_RANGE, size=11))
    w[0] = w[-1] = 0.0
    return w


def _jerk(rng: np.random.Generator, strategy: str, m: int) -> np.ndarray:
    if strategy == "cnst":
        return np.full(m, rng.uniform(*J_RANGE))
    return rng.uniform(*J_RANGE, size=m)


def _accel(rng, strategy: str, m: int, h: float, J: np.ndarray, w_int: np.ndarray) -> np.ndarray:
    if strategy == "cnst":
        return np.full(m, rng.uniform(*A_RANGE))
    draws = rng.uniform(*A_RANGE, size=m)
    if strategy == "rnd":
        return draws
    # reg: each step clipped to the band |A_{k+1} - A_k| <= h J_k / w_max_k
    A = np.empty(m)
    A[0] = draws[0]
    for k in range(m - 1):
        band = h * J[k] / w_int[k]
        A[k + 1] = np.clip(np.clip(draws[k + 1], A[k] - band, A[k] + band), *A_RANGE)
    return A


def generate_one(spec: GenSpec, k: int) -> Instance:
    rng = instance_rng(spec, k)
    n, m = spec.n, spec.n - 2
    w_max = _w_max(rng, spec.w_strategy, n)
    J = _jerk(rng, spec.j_strategy, m)
    A = _accel(rng, spec.a_strategy, m, spec.h, J, w_max[1:-1])
    return Instance(n=n, h=spec.h, A=A, J=J, w_max=w_max)


def generate(spec: GenSpec) -> list[Instance]:
    return [generate_one(spec, k) for k in range(spec.count)]


# -- benchmark ----------------------------------------------------------------


@dataclasses.dataclass(frozen=True)
class InstanceRecord:
    family: str
    index: int
    seed: int
    certificate: Certificate
    jerk_err: float
    gap_pct: float | None
    time: float
    status: str

    def to_dict(self) -> dict:
        return {
            "family": self.family,
            "index": self.index,
            "seed": self.seed,
            "verdict": self.certificate.verdict.value,
            "jerk_err": self.jerk_err,
            "gap_pct": self.gap_pct,
            "time": self.time,
            "status": self.status,
            "certificate": self.certificate.to_dict(),
        }

    @classmethod
    def from_dict(cls, d: dict) -> "InstanceRecord":
        return cls(
            family=d["family"],
            index=int(d["index"]),
            seed=int(d["seed"]),
            certificate=Certificate.from_dict(d["certificate"]),
            jerk_err=float(d["jerk_err"]),
            gap_pct=None if d.get("gap_pct") is None else float(d["gap_pct"]),
            time=float(d["time"]),
            status=d.get("status", "optimal"),
        )


@dataclasses.dataclass(frozen=True)
class BenchRow:
    labels: tuple[str, str, str]
    count: int
    non_exact: int
    max_jerk_err: float
    mean_jerk_err: float
    max_gap_pct: float | None
    mean_gap_pct: float | None
    mean_time: float
    failures: int = 0

    @property
    def name(self) -> str:
        return "-".join(self.labels)


def _run_instance(spec: GenSpec, k: int, tol: float) -> InstanceRecord:
    inst = generate_one(spec, k)
    res = plan(inst, tol=tol)
    cert = res.certificate
    jerk = max(cert.max_pos_jerk_viol, cert.max_neg_jerk_viol, 0.0)
    gap = cert.gap_rel
    gap_pct = None
    if cert.verdict is Verdict.INEXACT and gap is not None:
        gap_pct = 100.0 * gap
    return InstanceRecord(
        family=spec.name,
        index=k,
        seed=spec.seed,
        certificate=cert,
        jerk_err=jerk,
        gap_pct=gap_pct,
        time=res.relaxed.solve_time,
        status=res.relaxed.status.value,
    )


def aggregate(labels: tuple[str, str, str], records: Sequence[InstanceRecord]) -> BenchRow:
    """Table columns; means run over every instance of the family."""
    count = len(records)
    inexact = [r for r in records if r.certificate.verdict is Verdict.INEXACT]
    failures = sum(r.certificate.verdict is Verdict.UNKNOWN for r in records)
    jerk = np.array([r.jerk_err for r in records]) if records else np.zeros(0)
    if inexact:
        gaps = [r.gap_pct if r.gap_pct is not None else math.inf for r in inexact]
        max_gap = float(max(gaps))
        mean_gap = float(sum(gaps) / count)
    else:
        max_gap = mean_gap = None
    return BenchRow(
        labels=labels,
        count=count,
        non_exact=len(inexact),
        max_jerk_err=float(jerk.max()) if count else 0.0,
        mean_jerk_err=float(jerk.mean()) if count else 0.0,
        max_gap_pct=max_gap,
        mean_gap_pct=mean_gap,
        mean_time=float(np.mean([r.time for r in records])) if count else 0.0,
        failures=failures,
    )


def worker_count() -> int:
    raw = os.environ.get("PLANNER_THREADS", "")
    try:
        val = int(raw)
    except ValueError:
        val = 1
    return max(1, val)


def run_family(spec: GenSpec, tol: float = 1e-5, workers: int | None = None) -> list[InstanceRecord]:
    workers = worker_count() if workers is None else max(1, workers)
    ks = range(spec.count)
    if workers == 1 or spec.count <= 1:
        return [_run_instance(spec, k, tol) for k in ks]
    with cf.ProcessPoolExecutor(max_workers=workers) as pool:
        # map keeps submission order, so output does not depend on scheduling
        return list(pool.map(_run_instance, itertools.repeat(spec), ks, itertools.repeat(tol)))


def run_table(
    specs: Iterable[GenSpec], tol: float = 1e-5, workers: int | None = None, log=None
) -> list[BenchRow]:
    """Run every family and aggregate one table row each.

    ``log`` (a text stream) receives one JSON object per instance.
    """
    rows = []
    for spec in specs:
        recs = run_family(spec, tol, workers)
        if log is not None:
            for r in recs:
                log.write(json.dumps(r.to_dict(), sort_keys=True) + "\n")
        rows.append(aggregate(spec.labels, recs))
    return rows


def read_log(path_or_stream) -> Iterator[InstanceRecord]:
    stream = open(path_or_stream) if isinstance(path_or_stream, (str, Path)) else path_or_stream
    try:
        for line in stream:
            line = line.strip()
            if line:
                yield InstanceRecord.from_dict(json.loads(line))
    finally:
        if stream is not path_or_stream:
            stream.close()


# -- output -------------------------------------------------------------------

CSV_COLUMNS = ("W", "A", "J", "Non-exact", "Max jerk err", "Mean jerk err", "Max gap[%]", "Mean gap[%]")
TEXT_COLUMNS = CSV_COLUMNS + ("Mean time [s]",)


def _fmt(x: float | None) -> str:
    if x is None:
        return "N/A"
    if x == 0:
        return "0"
    return f"{x:.5g}"


def _label(s: str) -> str:
    return s.replace("_", " ")


def _cells(row: BenchRow) -> list[str]:
    return [
        *(_label(s) for s in row.labels),
        str(row.non_exact),
        _fmt(row.max_jerk_err),
        _fmt(row.mean_jerk_err),
        _fmt(row.max_gap_pct),
        _fmt(row.mean_gap_pct),
    ]


def table_csv(rows: Sequence[BenchRow]) -> str:
    """Deterministic CSV: every column but the wall-clock time."""
    buf = io.StringIO()
    wr = csv.writer(buf, lineterminator="\n")
    wr.writerow(CSV_COLUMNS)
    for row in rows:
        wr.writerow(_cells(row))
    return buf.getvalue()


def table_text(rows: Sequence[BenchRow]) -> str:
    body = [list(TEXT_COLUMNS)] + [_cells(r) + [_fmt(r.mean_time)] for r in rows]
    widths = [max(len(line[c]) for line in body) for c in range(len(TEXT_COLUMNS))]
    out = []
    for j, line in enumerate(body):
        out.append("  ".join(cell.ljust(w) for cell, w in zip(line, widths)).rstrip())
        if j == 0:
            out.append("  ".join("-" * w for w in widths))
    return "\n".join(out) + "\n"


def timings_csv(rows: Sequence[BenchRow]) -> str:
    buf = io.StringIO()
    wr = csv.writer(buf, lineterminator="\n")
    wr.writerow(("W", "A", "J", "count", "Mean time [s]"))
    for r in rows:
        wr.writerow([*(_label(s) for s in r.labels), r.count, f"{r.mean_time:.6f}"])
    return buf.getvalue()
