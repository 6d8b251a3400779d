"""Command-line entry point.

Exit status: 0 when every requested check behaves as expected (negative
controls must fail), 1 when a check fails unexpectedly, 2 on usage or input
errors. Defaults for the common flags can be put in a JSON file named by the
``CORRWALK_CONFIG`` environment variable, e.g. ``{"threads": 4, "alpha": 0.001}``.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import os
import sys
from pathlib import Path

from . import decomposition as dec
from . import finance, mcstats, oracle, rng
from .models import SHIPPED, JointPath, ModelError, parse_model, simulate, simulate_batch
from .reporting import FORMATS, emit_report

CONFIG_ENV = "CORRWALK_CONFIG"


def _load_config() -> dict:
    path = os.environ.get(CONFIG_ENV)
    if not path:
        return {}
    try:
        return json.loads(Path(path).read_text(encoding="utf-8"))
    except (OSError, ValueError) as exc:
        raise SystemExit(f"cannot read config {path}: {exc}")


def _common(p: argparse.ArgumentParser, fmt: str = "json") -> None:
    p.add_argument("--format", choices=FORMATS, default=fmt, help="output format (default: %(default)s)")
    p.add_argument("--out", type=Path, help="write output here instead of stdout")
    p.add_argument("--threads", type=int, default=1, help="worker threads; results do not depend on it")


def _stochastic(p: argparse.ArgumentParser, reps: int | None = None) -> None:
    p.add_argument("--seed", type=int, required=True, help="root seed (mandatory, no implicit entropy)")
    if reps is not None:
        p.add_argument("--reps", type=int, default=reps, help="replications (default: %(default)s)")
    p.add_argument("--alpha", type=float, default=mcstats.SIGNIFICANCE, help="significance (default: %(default)s)")


def build_parser() -> argparse.ArgumentParser:
    models = ", ".join(SHIPPED)
    ap = argparse.ArgumentParser(
        prog="corrwalk",
        description="Common/counter-move decomposition of correlated +-1 walks.",
        epilog=f"Models: kind:args (constant:1/4, q-history:1/4,3/8, adversarial:1/4,2/5,1/10, "
        f"biased:7/10,1/2, gaussian:0.5), inline JSON, @file.json, or one of: {models}. "
        f"Defaults may be set in the JSON file named by ${CONFIG_ENV}.",
    )
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("simulate", help="simulate joint paths")
    p.add_argument("--model", required=True)
    p.add_argument("--N", type=int, required=True, help="steps per path")
    _stochastic(p, reps=1)
    _common(p, "csv")

    p = sub.add_parser("decompose", help="decompose a path into X, Y, T")
    src = p.add_mutually_exclusive_group(required=True)
    src.add_argument("--from-table1", action="store_true", help="use the built-in worked example")
    src.add_argument("--input", type=Path, help="CSV with columns B,W or xi,eta")
    src.add_argument("--model", help="simulate the path from this model (needs --N and --seed)")
    p.add_argument("--N", type=int)
    p.add_argument("--seed", type=int)
    p.add_argument("--completion-seed", type=int, help="complete unreached increments with fair draws")
    _common(p, "csv")

    p = sub.add_parser("oracle-check", help="exact finite-horizon identity checks")
    p.add_argument("--model", required=True, action="append", help="repeatable")
    p.add_argument("--N", type=int, default=8)
    p.add_argument("--cap", type=int, default=oracle.DEFAULT_CAP, help="maximum horizon")
    p.add_argument("--all", action="store_true", help="run every applicable check")
    p.add_argument("--check", action="append", choices=("symmetry", "halving", "c1", "biased"), default=[])
    _common(p, "json")

    p = sub.add_parser("mc-test", help="Monte Carlo hypothesis tests")
    tests = p.add_subparsers(dest="test", required=True)

    t = tests.add_parser("block-pmf", help="uniformity of the first k X and l Y increments")
    t.add_argument("--model", required=True)
    t.add_argument("--k", type=int, default=3)
    t.add_argument("--l", type=int, default=3)
    t.add_argument("--N", type=int, default=64, help="horizon")
    t.add_argument("--completion-seed", type=int)
    t.add_argument("--emit", choices=("report", "plotdata"), default="report")
    _stochastic(t, reps=1_000_000)
    _common(t)

    t = tests.add_parser("delta-t", help="common-move frequency under the Gaussian driver")
    t.add_argument("--rho", type=float, required=True)
    t.add_argument("--z", type=float, default=3.0, help="z tolerance")
    _stochastic(t, reps=1_000_000)
    _common(t)

    t = tests.add_parser("independence", help="G-test of sign block vs initial Q-pattern")
    t.add_argument("--model", required=True)
    t.add_argument("--k", type=int, default=1)
    t.add_argument("--l", type=int, default=1)
    t.add_argument("--pattern-length", type=int, default=2)
    t.add_argument("--N", type=int, default=64, help="horizon")
    _stochastic(t, reps=1_000_000)
    _common(t)

    t = tests.add_parser("biased", help="drift of X and fairness of Y for a biased model")
    t.add_argument("--p", required=True)
    t.add_argument("--theta", required=True)
    t.add_argument("--N", type=int, default=200, help="horizon")
    t.add_argument("--z", type=float, default=3.0)
    _stochastic(t, reps=100_000)
    _common(t)

    t = tests.add_parser("calibrate", help="exact vs MC probabilities of random events")
    t.add_argument("--model", action="append", help="repeatable; default: all shipped exact models")
    t.add_argument("--N", type=int, default=8)
    t.add_argument("--events", type=int, default=20)
    t.add_argument("--z", type=float, default=4.0)
    _stochastic(t, reps=1_000_000)
    _common(t)

    p = sub.add_parser("analyze", help="co-movement report for two price series")
    p.add_argument("--csv", type=Path, required=True, help="CSV with a timestamp and two price columns")
    p.add_argument("--csv2", type=Path, help="second single-series CSV, inner-joined on timestamp")
    p.add_argument("--time-col", default="timestamp")
    p.add_argument("--cols", help="comma-separated price column names")
    p.add_argument("--window", type=int)
    _common(p, "json")

    cfg = _load_config()
    if cfg:
        for action in sub.choices.values():
            action.set_defaults(**{k: v for k, v in cfg.items() if k in {"threads", "alpha", "format", "reps"}})
        for action in tests.choices.values():
            action.set_defaults(**{k: v for k, v in cfg.items() if k in {"threads", "alpha", "format", "reps"}})
    return ap


def _write(args, payload: bytes) -> None:
    if args.out:
        args.out.write_bytes(payload)
    else:
        sys.stdout.buffer.write(payload)
        sys.stdout.flush()


def _path_rows(xi, eta) -> list:
    path = JointPath.from_signs(xi, eta)
    return [
        {"n": i + 1, "xi": a, "eta": b, "B": path.B[i], "W": path.W[i]}
        for i, (a, b) in enumerate(zip(xi, eta))
    ]


def _cmd_simulate(args) -> int:
    model = parse_model(args.model)
    xi, eta = simulate_batch(model, args.N, args.reps, args.seed, threads=args.threads)
    if args.format == "json":
        doc = {"model": model.to_json(), "seed": args.seed, "paths": [
            {"xi": a.tolist(), "eta": b.tolist()} for a, b in zip(xi, eta)
        ]}
        _write(args, (json.dumps(doc, sort_keys=True) + "\n").encode())
        return 0
    buf = io.StringIO()
    w = csv.DictWriter(buf, fieldnames=("path", "n", "xi", "eta", "B", "W"), lineterminator="\n")
    w.writeheader()
    for r, (a, b) in enumerate(zip(xi.tolist(), eta.tolist())):
        for row in _path_rows(a, b):
            w.writerow({"path": r, **row})
    _write(args, buf.getvalue().encode())
    return 0


def _read_path(path: Path) -> JointPath:
    rows = list(csv.DictReader(path.read_text(encoding="utf-8-sig").splitlines()))
    if not rows:
        raise ValueError(f"{path} has no data rows")
    if {"B", "W"} <= set(rows[0]):
        return JointPath.from_walks([int(r["B"]) for r in rows], [int(r["W"]) for r in rows])
    if {"xi", "eta"} <= set(rows[0]):
        return JointPath.from_signs([int(r["xi"]) for r in rows], [int(r["eta"]) for r in rows])
    raise ValueError(f"{path} needs columns B,W or xi,eta")


def _cmd_decompose(args) -> int:
    if args.from_table1:
        path = dec.table1_path()
    elif args.input:
        path = _read_path(args.input)
    else:
        if args.N is None or args.seed is None:
            raise ValueError("--model needs --N and --seed")
        path = simulate(parse_model(args.model), args.N, args.seed)
    completion = None
    if args.completion_seed is not None:
        completion = (rng.stream(args.completion_seed, rng.ZETA), rng.stream(args.completion_seed, rng.PSI))
    d = dec.decompose(path, completion)
    if args.format == "csv":
        _write(args, dec.to_csv(path, d).encode())
    elif args.format == "json":
        doc = {"B": list(path.B), "W": list(path.W), **d.to_json()}
        _write(args, (json.dumps(doc, sort_keys=True) + "\n").encode())
    else:
        rows = dec.table_rows(path, d)
        lines = ["\t".join(dec.TABLE_COLUMNS)] + ["\t".join(str(r[c]) for c in dec.TABLE_COLUMNS) for r in rows]
        _write(args, ("\n".join(lines) + "\n").encode())
    return 0


def _cmd_oracle(args) -> int:
    checks = ["all"] if args.all or not args.check else args.check
    reports = []
    for text in args.model:
        reports += oracle.run_suite(parse_model(text), args.N, checks, cap=args.cap)
    _write(args, emit_report(reports, args.format))
    return 0 if all(r.ok for r in reports) else 1


def _cmd_mc(args) -> int:
    if args.test == "block-pmf":
        counts = mcstats.mc_block_pmf(
            parse_model(args.model), args.k, args.l, args.N, args.reps, args.seed,
            completion_seed=args.completion_seed, threads=args.threads,
        )
        report = mcstats.chi_square_uniform(counts, args.alpha)
        report.extra.update(model=args.model, completed=counts.completed, horizon=args.N)
        if args.emit == "plotdata":
            _write(args, mcstats.plotdata_csv(counts).encode())
            return 0 if report.ok else 1
        reports = [report]
    elif args.test == "delta-t":
        reports = [mcstats.estimate_delta_T(args.rho, args.reps, args.seed, z_crit=args.z, threads=args.threads)]
    elif args.test == "independence":
        reports = [mcstats.independence_test_xyt(
            parse_model(args.model), args.k, args.l, args.pattern_length, args.reps, args.seed,
            horizon=args.N, significance=args.alpha, threads=args.threads,
        )]
    elif args.test == "biased":
        reports = list(mcstats.biased_walk_tests(
            args.p, args.theta, args.N, args.reps, args.seed, z_crit=args.z, threads=args.threads
        ))
    else:
        names = args.model or [k for k, m in SHIPPED.items() if m.exact]
        models = [parse_model(m) for m in names]
        reports = mcstats.calibrate_events(
            models, args.N, args.events, args.reps, args.seed, z_crit=args.z, threads=args.threads
        )
    _write(args, emit_report(reports, args.format))
    return 0 if all(r.ok for r in reports) else 1


def _cmd_analyze(args) -> int:
    data = args.csv.read_bytes()
    if args.csv2:
        s1 = finance.parse_single(data, args.time_col)
        s2 = finance.parse_single(args.csv2.read_bytes(), args.time_col)
        s1, s2 = finance.align(s1, s2)
    else:
        cols = args.cols.split(",") if args.cols else None
        s1, s2 = finance.parse_csv(data, args.time_col, cols)
    if args.format == "csv":
        path = JointPath.from_signs(finance.to_signs(s1), finance.to_signs(s2))
        _write(args, dec.to_csv(path, dec.decompose(path)).encode())
        return 0
    report = finance.analyze(s1, s2, args.window)
    _write(args, emit_report([report], args.format))
    return 0


COMMANDS = {
    "simulate": _cmd_simulate,
    "decompose": _cmd_decompose,
    "oracle-check": _cmd_oracle,
    "mc-test": _cmd_mc,
    "analyze": _cmd_analyze,
}


def run(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return COMMANDS[args.command](args)
    except (ModelError, oracle.OracleError, finance.IngestError, mcstats.UndersampledError, ValueError, OSError) as exc:
        print(f"corrwalk {args.command}: error: {exc}", file=sys.stderr)
        return 2


def main() -> None:
    sys.exit(run())


if __name__ == "__main__":
    main()
