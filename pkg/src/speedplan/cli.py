"""Command-line front end: ``speedplan plan|certify|bench``."""

from __future__ import annotations

import argparse
import csv
import json
import sys
from pathlib import Path

import numpy as np

from . import bench
from .certify import Certificate, Verdict, ceiling_precheck
from .conic import SolverOptions
from .geometry import PathError, grid, load_path, speed_ceiling
from .pipeline import plan
from .problem import Instance, InstanceError, load_instance

EXIT_EXACT, EXIT_INEXACT, EXIT_INPUT, EXIT_SOLVER = 0, 1, 2, 3


class InputError(Exception):
    pass


def exit_code(cert: Certificate) -> int:
    return {Verdict.EXACT: EXIT_EXACT, Verdict.INEXACT: EXIT_INEXACT}.get(cert.verdict, EXIT_SOLVER)


def instance_from_path(path_file: str, n: int, h: float | None, rho: float) -> Instance:
    """Build an instance from a path file.

    Tangential acceleration and jerk limits ``a``, ``j`` become the squared-speed
    bounds ``A = 2a`` and ``J = 2j``. ``--h`` overrides ``--n`` when given.
    """
    path = load_path(path_file)
    if path.a_t_max is None or path.j_max is None:
        raise InputError("path file needs a_t_max and j_max")
    if h is not None:
        if not h > 0:
            raise InputError("--h must be positive")
        n = int(round(path.s_f / h)) + 1
    w_max = speed_ceiling(path, n)
    w_max[0] = w_max[-1] = 0.0
    step = path.s_f / (n - 1)
    return Instance(n=n, h=step, A=2.0 * float(path.a_t_max), J=2.0 * float(path.j_max), w_max=w_max, rho=rho)


def _load(args) -> tuple[Instance, np.ndarray]:
    if bool(args.instance) == bool(args.path):
        raise InputError("give exactly one of --instance or --path")
    if args.instance:
        inst = load_instance(args.instance)
        if args.rho is not None:
            inst = inst.replace(rho=args.rho)
        s = inst.h * np.arange(inst.n)
    else:
        inst = instance_from_path(args.path, args.n, args.h, args.rho or 0.0)
        s = grid(load_path(args.path), inst.n)
    return inst, s


def _solver_opts(args) -> SolverOptions:
    return SolverOptions(max_iters=args.max_iters) if args.max_iters else SolverOptions()


def _write_csv(path: Path, header, rows) -> None:
    with open(path, "w", newline="") as fh:
        wr = csv.writer(fh, lineterminator="\n")
        wr.writerow(header)
        wr.writerows(rows)


def _num(x: float) -> str:
    return repr(float(x))


def cmd_plan(args) -> int:
    inst, s = _load(args)
    res = plan(inst, tol=args.tol, solver=_solver_opts(args))
    out = Path(args.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    res.certificate.save(out / "certificate.json")
    if res.w is not None:
        w = res.w
        v = np.sqrt(np.maximum(w, 0.0))
        _write_csv(out / "profile.csv", ("i", "s_i", "w_i", "v_i"),
                   ((i, _num(s[i]), _num(w[i]), _num(v[i])) for i in range(inst.n)))
        _write_csv(out / "plot.csv", ("s_i", "w_i", "w_max_i"),
                   ((_num(s[i]), _num(w[i]), _num(inst.w_max[i])) for i in range(inst.n)))
    cert = res.certificate
    print(f"verdict: {cert.verdict.value}")
    print(f"lower bound: {cert.lower_bound:.10g}")
    print(f"upper bound: {cert.upper_bound:.10g}")
    if cert.gap_rel is not None:
        print(f"relative gap: {cert.gap_rel:.3e}")
    return exit_code(cert)


def cmd_certify(args) -> int:
    inst, _ = _load(args)
    if not inst.has_floor and ceiling_precheck(inst):
        cert = Certificate(Verdict.EXACT, lower_bound=-np.inf, method="precheck", tol=args.tol)
    else:
        res = plan(inst, tol=args.tol, solver=_solver_opts(args))
        cert = res.certificate
    text = cert.to_json()
    if args.out_dir:
        out = Path(args.out_dir)
        out.mkdir(parents=True, exist_ok=True)
        cert.save(out / "certificate.json")
    print(text)
    return exit_code(cert)


def cmd_bench(args) -> int:
    try:
        fams = bench.parse_families(args.families)
    except ValueError as exc:
        raise InputError(str(exc)) from None
    specs = [bench.GenSpec(*f, n=args.n, h=args.h or 1.0, seed=args.seed, count=args.count) for f in fams]
    out = Path(args.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    with open(out / "bench.jsonl", "w") as log:
        rows = bench.run_table(specs, tol=args.tol, log=log)
    (out / "bench.csv").write_text(bench.table_csv(rows))
    (out / "timings.csv").write_text(bench.timings_csv(rows))
    text = bench.table_text(rows)
    (out / "bench.txt").write_text(text)
    print(text, end="")
    return 0


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="speedplan", description="Jerk-limited minimum-time speed planning.")
    sub = p.add_subparsers(dest="command", required=True)

    def common(sp, out_default):
        sp.add_argument("--tol", type=float, default=1e-5, help="feasibility tolerance (default 1e-5)")
        sp.add_argument("--n", type=int, default=1000, help="number of samples (default 1000)")
        sp.add_argument("--h", type=float, default=None, help="grid step; overrides --n for paths")
        sp.add_argument("--out-dir", default=out_default)
        sp.add_argument("--max-iters", type=int, default=None, help="interior point iteration cap")

    for name, fn, out in (("plan", cmd_plan, "."), ("certify", cmd_certify, None)):
        sp = sub.add_parser(name)
        sp.add_argument("--instance", help="instance JSON file")
        sp.add_argument("--path", help="path JSON file")
        sp.add_argument("--rho", type=float, default=None)
        common(sp, out)
        sp.set_defaults(func=fn)

    sp = sub.add_parser("bench")
    sp.add_argument("--families", default="all", help="comma-separated W-A-J names or 'all'")
    sp.add_argument("--count", type=int, default=1000)
    sp.add_argument("--seed", type=int, default=0)
    common(sp, "bench_out")
    sp.set_defaults(func=cmd_bench)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (InputError, InstanceError, PathError, ValueError, OSError, json.JSONDecodeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT


if __name__ == "__main__":
    sys.exit(main())
