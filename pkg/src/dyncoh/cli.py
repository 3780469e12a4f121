"""Command-line front end: ``dyncoh <command> [options]``.

Exit codes: 0 success, 1 a reproduce row failed, 2 usage error, 3 solver
failure, 4 unknown or malformed channel spec, 5 dimension mismatch.
"""

import argparse
import csv
import io
import json
import os
import sys
import time
from concurrent.futures import ThreadPoolExecutor

import numpy as np

from . import channels as ch
from . import measures, tasks
from .channel_io import (UnknownChannelSpec, encode_matrix, load_superchannel, parse_channel)
from .linalg import DimensionMismatch
from .sdp import SolverError, Tolerances
from .superchannels import FreeSet, SuperchannelError, classify_superchannel, marginal_errors

EXIT_OK = 0
EXIT_FAILED_ROWS = 1
EXIT_USAGE = 2
EXIT_SOLVER = 3
EXIT_SPEC = 4
EXIT_DIMS = 5

REPRODUCE_TOL = 1e-5


class UsageError(Exception):
    pass


# commands; each returns (value, gap, details, witness)

def _tols(args) -> Tolerances:
    return Tolerances(gap_tol=args.tol, feas_tol=args.feas_tol)


def _need(args, name):
    val = getattr(args, name)
    if val is None:
        raise UsageError(f"{args.command} needs --{name.replace('_', '-')}")
    return val


def _channel(args, name="channel"):
    return parse_channel(_need(args, name))


def cmd_classify(args):
    if args.superchannel:
        theta = load_superchannel(args.superchannel)
        mem = classify_superchannel(theta)
        label = "disc" if mem.is_disc else ("misc" if mem.is_misc else "none")
        errs = marginal_errors(theta.J, theta.dims)
        details = {"is_misc": mem.is_misc, "is_disc": mem.is_disc, "misc_error": mem.misc_error,
                   "disc_error": mem.disc_error, **{f"marginal_{k}": v for k, v in sorted(errs.items())}}
        return label, None, details, {"theta": theta.J}
    N = _channel(args)
    off = float(np.abs(N.J - np.diag(np.diag(N.J))).max(initial=0.0))
    classical = ch.is_classical(N, tol=args.feas_tol)
    return classical, None, {"offdiagonal_max": off}, {"choi": N.J}


def cmd_lr(args):
    N = _channel(args)
    res = measures.log_robustness(N, _tols(args))
    details = {"primal_value": res.primal_value, "dual_value": res.dual_value}
    return res.value, res.gap, details, {"omega": res.primal_witness, "eta": res.dual_witness}


def cmd_lr_delta(args):
    N = _channel(args)
    val, rep = ch.dmax_channels(N, ch.dephased(N), _tols(args), return_report=True)
    return val, _gap(rep), {}, {"dephased_choi": ch.dephased(N).J}


def cmd_dmax(args):
    N, E = _channel(args), _channel(args, "channel2")
    val, rep = ch.dmax_channels(N, E, _tols(args), return_report=True)
    return val, _gap(rep), {}, {}


def cmd_smooth_lr(args):
    N = _channel(args)
    return measures.smoothed_log_robustness(N, args.eps, _tols(args)), None, {"eps": args.eps}, {}


def cmd_monotone(args):
    N = _channel(args)
    P = parse_channel(args.probe) if args.probe else ch.identity(N.d_out)
    res = measures.monotone_G(measures.MonotoneProbe(P, FreeSet(args.set)), N, _tols(args))
    details = {"first_term": res.first_term, "second_term": res.second_term, "set": args.set}
    return res.value, res.gap, details, {"theta": res.theta.J}


def cmd_convert(args):
    N, M = _channel(args), _channel(args, "channel2")
    res = tasks.conversion_distance(N, M, FreeSet(args.set), _tols(args))
    details = {"dual_value": res.dual_value, "set": args.set}
    witness = {"theta": res.theta.J, **{f"dual_{k}": v for k, v in res.dual_blocks.items() if k != "t"}}
    return res.value, res.gap, details, witness


def cmd_cost(args):
    N = _channel(args)
    res = tasks.exact_one_shot_cost(N, FreeSet(args.set), _tols(args))
    details = {"lr": res.lr, "m": res.m, "feasible_at_m": res.feasible_at_m,
               "infeasible_below": res.infeasible_below, "set": args.set}
    return res.cost_bits, None, details, {"omega": res.omega.J}


def cmd_distill(args):
    N = _channel(args)
    res = tasks.one_shot_distill(N, args.eps, FreeSet(args.set), _tols(args))
    details = {"n": res.n, "fidelity": res.fidelity, "eps": args.eps, "set": args.set,
               "searched": [n for n, _, _ in res.trace]}
    return res.bits, None, details, {"rho": res.rho, "gamma": res.gamma}


def _gap(rep):
    return None if rep.status != "optimal" else rep.gap


COMMANDS = {
    "classify": cmd_classify, "lr": cmd_lr, "lr-delta": cmd_lr_delta, "dmax": cmd_dmax,
    "smooth-lr": cmd_smooth_lr, "monotone": cmd_monotone, "convert": cmd_convert,
    "cost": cmd_cost, "distill": cmd_distill,
}


# reproduce suites; each row is computed independently and merged by key

_CLASSICAL_REMARK = {
    "identity-map": [[1, 0], [0, 1]],
    "bit-flip": [[0, 1], [1, 0]],
    "reset": [[1, 1], [0, 0]],
    "uniform": [[0.5, 0.5], [0.5, 0.5]],
    "biased": [[0.3, 0.6], [0.7, 0.4]],
}


def _hadamard():
    return np.array([[1, 1], [1, -1]]) / np.sqrt(2)


def _remark_jobs(tols):
    jobs = []
    for name, P in _CLASSICAL_REMARK.items():
        jobs.append((f"lr/classical-{name}", lambda P=P: measures.log_robustness(ch.classical(P), tols).value, 0.0))
    jobs.append(("lr/identity:2", lambda: measures.log_robustness(ch.identity(2), tols).value, 1.0))
    jobs.append(("lr/replace-plus:2", lambda: measures.log_robustness(ch.replace_plus(2), tols).value, 1.0))
    probe = measures.MonotoneProbe(ch.identity(2), FreeSet.MISC)
    unitaries = {"hadamard": _hadamard(), "t-gate": np.diag([1, np.exp(1j * np.pi / 4)])}
    for k in range(3):
        unitaries[f"haar-{k}"] = ch.random_unitary(2, rng=1000 + k)
    for name, U in unitaries.items():
        jobs.append((f"g_id/unitary-{name}", lambda U=U: measures.monotone_G(probe, ch.unitary(U), tols).value, 2.0))
    jobs.append(("g_id/replace-plus:2", lambda: measures.monotone_G(probe, ch.replace_plus(2), tols).value, 2.0))
    probes = {"identity": ch.identity(2), "hadamard": ch.unitary(_hadamard()), "depolarizing-0.5": ch.depolarizing(0.5, 2)}
    for pname, P in probes.items():
        pr = measures.MonotoneProbe(P, FreeSet.MISC)
        N = ch.classical(_CLASSICAL_REMARK["biased"])
        jobs.append((f"g_{pname}/classical-biased", lambda pr=pr, N=N: measures.monotone_G(pr, N, tols).value, 0.0))
    return jobs


def _run_remark(job):
    key, fn, expected = job
    value = float(fn())
    diff = abs(value - expected)
    return {"key": key, "computed": value, "expected": expected, "diff": diff, "pass": bool(diff <= REPRODUCE_TOL)}


LEMMA_GRID = {"d": (2, 3), "lambda": (0.0, 0.3, 0.7, 1.0), "eps": (0.05, 0.2, 0.5)}
FAMILIES = {"depolarizing": ch.depolarizing, "partial-dephasing": ch.partial_dephasing}


def _lemma_jobs(tols):
    jobs = []
    for fam in FAMILIES:
        for d in LEMMA_GRID["d"]:
            for lam in LEMMA_GRID["lambda"]:
                for eps in LEMMA_GRID["eps"]:
                    jobs.append((fam, d, lam, eps, tols))
    return jobs


def _run_lemma(job):
    fam, d, lam, eps, tols = job
    N = FAMILIES[fam](lam, d)
    n_misc = tasks.one_shot_distill(N, eps, FreeSet.MISC, tols).n
    n_disc = tasks.one_shot_distill(N, eps, FreeSet.DISC, tols).n
    expected = tasks.lemma_distillable_n(lam, d, eps)
    return {"key": f"{fam}:{lam}:{d}/eps={eps}", "n_misc": n_misc, "n_disc": n_disc, "expected": expected,
            "pass": n_misc == expected and n_disc == expected}


def cmd_reproduce(args):
    tols = _tols(args)
    if args.suite == "remarks":
        jobs, fn = _remark_jobs(tols), _run_remark
    else:
        jobs, fn = _lemma_jobs(tols), _run_lemma
    workers = max(1, min(args.jobs or os.cpu_count() or 1, 8))
    with ThreadPoolExecutor(max_workers=workers) as pool:
        rows = list(pool.map(fn, jobs))
    rows.sort(key=lambda r: r["key"])
    passed = sum(r["pass"] for r in rows)
    return rows, passed


# output

def _jsonable(x):
    if isinstance(x, np.ndarray):
        return encode_matrix(x) if x.ndim == 2 else [float(v) for v in np.real(x).ravel()]
    if isinstance(x, (np.floating, float)):
        x = float(x)
        return x if np.isfinite(x) else ("inf" if x > 0 else ("-inf" if x < 0 else "nan"))
    if isinstance(x, np.integer):
        return int(x)
    if isinstance(x, np.bool_):
        return bool(x)
    if isinstance(x, dict):
        return {k: _jsonable(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [_jsonable(v) for v in x]
    return x


def _fmt(x) -> str:
    if isinstance(x, (bool, np.bool_)):
        return "true" if x else "false"
    if isinstance(x, (float, np.floating)):
        return f"{float(x):.10g}"
    if x is None:
        return "-"
    return str(x)


def _header(args) -> str:
    return f"# dyncoh {args.command}  gap_tol={args.tol:g}  feas_tol={args.feas_tol:g}"


def render_report(args, report: dict) -> str:
    if args.out == "json":
        return json.dumps(_jsonable(report), indent=2, sort_keys=True)
    flat = {}
    for k, v in report["inputs"].items():
        flat[k] = v
    flat["value"] = report["value"]
    flat["gap"] = report["gap"]
    for k, v in report.get("details", {}).items():
        flat[k] = v
    flat["time_ms"] = report["time_ms"]
    if args.out == "csv":
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        keys = list(flat)
        wit = report.get("witness", {})
        w.writerow(keys + [f"witness_{k}" for k in wit])
        w.writerow([_fmt(flat[k]) for k in keys] + [json.dumps(_jsonable(v)) for v in wit.values()])
        return _header(args) + "\n" + buf.getvalue().rstrip("\n")
    width = max(len(k) for k in flat)
    lines = [_header(args)] + [f"{k:<{width}}  {_fmt(v)}" for k, v in flat.items()]
    for name, mat in report.get("witness", {}).items():
        lines.append(f"witness {name}:")
        arr = np.asarray(mat)
        if np.iscomplexobj(arr) and np.abs(arr.imag).max(initial=0) < 1e-12:
            arr = arr.real
        lines.append(np.array2string(arr, precision=6, suppress_small=True, max_line_width=160))
    return "\n".join(lines)


def render_rows(args, suite: str, rows: list, passed: int, elapsed_ms: float) -> str:
    summary = f"passed {passed}/{len(rows)}"
    if args.out == "json":
        payload = {"command": "reproduce", "inputs": {"suite": suite}, "rows": rows,
                   "value": passed, "gap": None, "summary": summary, "time_ms": elapsed_ms}
        return json.dumps(_jsonable(payload), indent=2, sort_keys=True)
    cols = list(rows[0]) if rows else ["key"]
    if args.out == "csv":
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(cols)
        for r in rows:
            w.writerow([_fmt(r[c]) for c in cols])
        return _header(args) + "\n" + buf.getvalue() + f"# {summary}"
    cells = [[_fmt(r[c]) for c in cols] for r in rows]
    widths = [max([len(c)] + [len(row[i]) for row in cells]) for i, c in enumerate(cols)]
    lines = [_header(args), "  ".join(c.ljust(w) for c, w in zip(cols, widths))]
    lines += ["  ".join(v.ljust(w) for v, w in zip(row, widths)) for row in cells]
    lines.append(summary)
    return "\n".join(lines)


def _eps(text):
    v = float(text)
    if not 0 <= v < 1:
        raise argparse.ArgumentTypeError(f"eps must lie in [0, 1), got {v}")
    return v


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="dyncoh", description="Coherence of quantum channels: measures, "
                                     "free superchannels and operational tasks via SDP.")
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--channel", help="channel spec, e.g. identity:2 or depolarizing:0.5:2")
    common.add_argument("--channel2", help="second channel spec (dmax, convert)")
    common.add_argument("--set", choices=[f.value for f in FreeSet], default="misc")
    common.add_argument("--eps", type=_eps, default=0.0)
    common.add_argument("--tol", type=float, default=1e-7, help="SDP gap tolerance")
    common.add_argument("--feas-tol", type=float, default=1e-8, help="SDP feasibility tolerance")
    common.add_argument("--out", choices=["table", "csv", "json"], default="table")
    common.add_argument("--witness", action="store_true", help="include optimal witnesses in the report")
    sub = parser.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        p = sub.add_parser(name, parents=[common])
        if name == "classify":
            p.add_argument("--superchannel", help="superchannel JSON file to classify instead of a channel")
        if name == "monotone":
            p.add_argument("--probe", help="probe channel spec (default: identity on the output)")
    p = sub.add_parser("reproduce", parents=[common])
    p.add_argument("suite", choices=["remarks", "distill-lemmas"])
    p.add_argument("--jobs", type=int, default=None, help="worker threads")
    return parser


def _inputs(args) -> dict:
    keys = ["channel", "channel2", "probe", "superchannel"]
    out = {k: getattr(args, k) for k in keys if getattr(args, k, None) is not None}
    if args.command in ("smooth-lr", "distill"):
        out["eps"] = args.eps
    if args.command in ("monotone", "convert", "cost", "distill"):
        out["set"] = args.set
    return out


def run(argv=None, stdout=None) -> int:
    stdout = stdout or sys.stdout
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_USAGE if exc.code else EXIT_OK
    t0 = time.perf_counter()
    try:
        if args.command == "reproduce":
            rows, passed = cmd_reproduce(args)
            ms = round((time.perf_counter() - t0) * 1e3, 1)
            print(render_rows(args, args.suite, rows, passed, ms), file=stdout)
            return EXIT_OK if passed == len(rows) else EXIT_FAILED_ROWS
        value, gap, details, witness = COMMANDS[args.command](args)
    except UsageError as exc:
        print(f"dyncoh: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except UnknownChannelSpec as exc:
        print(f"dyncoh: unknown channel spec: {exc}", file=sys.stderr)
        return EXIT_SPEC
    except DimensionMismatch as exc:
        print(f"dyncoh: dimension mismatch: {exc}", file=sys.stderr)
        return EXIT_DIMS
    except SuperchannelError as exc:
        print(f"dyncoh: invalid superchannel: {exc}", file=sys.stderr)
        return EXIT_SPEC
    except SolverError as exc:
        print(f"dyncoh: solver failure: {exc}", file=sys.stderr)
        return EXIT_SOLVER
    report = {"command": args.command, "inputs": _inputs(args), "value": value, "gap": gap,
              "details": details, "time_ms": round((time.perf_counter() - t0) * 1e3, 1)}
    if args.witness:
        report["witness"] = witness
    print(render_report(args, report), file=stdout)
    return EXIT_OK


def main():
    sys.exit(run())


if __name__ == "__main__":
    main()
