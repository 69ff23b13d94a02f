"""Command-line front end.

Subcommands ``gamma``, ``rho``, ``noisy``, ``comp`` and ``ncomp`` run one
Monte-Carlo experiment; ``sweep`` runs a JSON-described grid of them;
``eta-curve`` evaluates the analytic test-count efficiency curves.  Results
go to stdout as a table and, with --out, to a CSV or JSON file.

Exit codes: 0 success, 1 harness error, 2 usage error.  A config file given
with --config supplies defaults; flags always win.  GT_SEED in the
environment is the fallback seed.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import os
import sys

from . import bench
from .core import round_instance

RESULT_COLUMNS = [
    "algorithm", "n", "k", "gamma", "gamma_prime", "rho", "p", "T", "trials",
    "successes", "success_rate", "ci_lo", "ci_hi", "mean_outcomes_read",
    "max_outcomes_read", "mean_labels", "storage_words", "seed", "hash_mode",
]

ETA_COLUMNS = ["theta", "variant", "eta_hat"]

RUN_COMMANDS = ("gamma", "rho", "noisy", "comp", "ncomp")


class UsageError(Exception):
    pass


def _add_common(sub: argparse.ArgumentParser):
    sub.add_argument("--n", type=int, help="item count (rounded up to a power of two)")
    sub.add_argument("--k", type=int, help="defective-count bound (rounded up)")
    sub.add_argument("--trials", type=int, default=100)
    sub.add_argument("--seed", type=int, default=None,
                     help="base seed (falls back to GT_SEED, then 0)")
    sub.add_argument("--hash-mode", choices=["full", "kwise", "pairwise", "permutation"],
                     default="full")
    sub.add_argument("--jobs", type=int, default=1, help="concurrent trial workers")
    sub.add_argument("--out", type=str, default=None, help="result file path")
    sub.add_argument("--format", choices=["csv", "json"], default="csv")
    sub.add_argument("--config", type=str, default=None,
                     help="JSON file of flag defaults (flags override it)")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="splitgt",
        description="Tree-splitting group testing benchmarks",
    )
    subs = parser.add_subparsers(dest="command", required=True)

    sp = subs.add_parser("gamma", help="divisibility-limited scheme")
    _add_common(sp)
    sp.add_argument("--gamma", type=int, help="max tests per item (>= 3)")
    sp.add_argument("--gamma-prime", type=int, default=None,
                    help="tree height override (default: optimised)")
    sp.add_argument("--c-const", type=float, default=None)
    sp.add_argument("--beta-exp", type=float, default=None,
                    help="target error term exponent: beta = (log2 n)^-beta_exp")
    sp.add_argument("--p", type=float, default=None, help="channel flip probability")

    sp = subs.add_parser("rho", help="size-limited-tests scheme")
    _add_common(sp)
    sp.add_argument("--rho", type=int, help="max items per test (rounded down)")
    sp.add_argument("--depth", type=int, default=None, help="tree depth C")
    sp.add_argument("--reps", type=int, default=None, help="mid-level repetitions N")
    sp.add_argument("--final-reps", type=int, default=None, help="final-level repetitions C'")
    sp.add_argument("--p", type=float, default=None, help="channel flip probability")

    sp = subs.add_parser("noisy", help="noise-tolerant binary splitting scheme")
    _add_common(sp)
    sp.add_argument("--p", type=float, default=None,
                    help="noise level: channel flip probability and design target")
    sp.add_argument("--design-p", type=float, default=None,
                    help="design noise target when it differs from the channel")
    sp.add_argument("--t", type=float, default=None)
    sp.add_argument("--epsilon", type=float, default=None)
    sp.add_argument("--mode", choices=["theory", "practice"], default=None)
    sp.add_argument("--reps", type=int, default=None, help="sequences per level N (odd)")
    sp.add_argument("--lookahead", type=int, default=None, help="lookahead depth r")
    sp.add_argument("--final-reps", type=int, default=None, help="batch multiplier C'")

    for name in ("comp", "ncomp"):
        sp = subs.add_parser(name, help=f"{name.upper()} baseline on a flat random design")
        _add_common(sp)
        sp.add_argument("--p", type=float, default=None, help="channel flip probability")
        sp.add_argument("--tests", type=int, default=None, help="test budget T")
        if name == "ncomp":
            sp.add_argument("--threshold", type=float, default=None,
                            help="max negative-test fraction to still flag an item")

    sp = subs.add_parser("sweep", help="run a JSON-described grid of experiments")
    sp.add_argument("--config", type=str, required=True)
    sp.add_argument("--out", type=str, default=None)
    sp.add_argument("--format", choices=["csv", "json"], default="csv")
    sp.add_argument("--seed", type=int, default=None)

    sp = subs.add_parser("eta-curve", help="analytic efficiency-exponent curves")
    sp.add_argument("--gamma", type=str, default="4,10",
                    help="comma-separated divisibility budgets")
    sp.add_argument("--theta-steps", type=int, default=9)
    sp.add_argument("--out", type=str, default=None)
    sp.add_argument("--format", choices=["csv", "json"], default="csv")

    return parser


def _apply_config_file(parser: argparse.ArgumentParser, argv: list[str]) -> argparse.Namespace:
    """Parse twice: the first pass finds --config, whose fields become the
    defaults for the second pass, so explicit flags override the file."""
    first = parser.parse_args(argv)
    path = getattr(first, "config", None)
    if path is None or first.command == "sweep":
        return first
    try:
        with open(path) as fh:
            file_values = json.load(fh)
    except OSError as exc:
        raise UsageError(f"cannot read config file {path}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise UsageError(f"config file {path} is not valid JSON: {exc}") from exc
    if not isinstance(file_values, dict):
        raise UsageError(f"config file {path} must hold a JSON object")
    known = {a.dest for a in parser._subparsers._group_actions[0].choices[first.command]._actions}
    defaults = {}
    for key, value in file_values.items():
        dest = key.replace("-", "_")
        if dest not in known:
            raise UsageError(f"config file {path} sets unknown flag {key!r}")
        defaults[dest] = value
    sub = parser._subparsers._group_actions[0].choices[first.command]
    sub.set_defaults(**defaults)
    return parser.parse_args(argv)


def _seed_of(args: argparse.Namespace) -> int:
    if getattr(args, "seed", None) is not None:
        return args.seed
    return int(os.environ.get("GT_SEED", "0"))


def _require(args, *names):
    for name in names:
        if getattr(args, name, None) is None:
            raise UsageError(f"--{name.replace('_', '-')} is required for {args.command}")


def config_from_args(args: argparse.Namespace) -> bench.TrialConfig:
    _require(args, "n", "k")
    overrides: dict = {}
    if args.command == "gamma":
        _require(args, "gamma")
        if args.gamma < 3:
            raise UsageError("gamma must be at least 3")
        overrides.update(gamma=args.gamma, gamma_prime=args.gamma_prime)
        if args.c_const is not None:
            overrides["c_const"] = args.c_const
        if args.beta_exp is not None:
            overrides["beta_exp"] = args.beta_exp
    elif args.command == "rho":
        _require(args, "rho")
        rounded = round_instance(args.n, args.k, args.rho)[2]
        if rounded != args.rho:
            print(f"note: rho rounded down to {rounded}", file=sys.stderr)
        overrides.update(rho=args.rho)
        if args.depth is not None:
            overrides["depth"] = args.depth
        if args.reps is not None:
            overrides["reps"] = args.reps
        if args.final_reps is not None:
            overrides["final_reps"] = args.final_reps
    elif args.command == "noisy":
        _require(args, "p")
        if not 0.0 < args.p < 0.5:
            raise UsageError("p must lie in (0, 0.5)")
        overrides.update(design_p=args.design_p, lookahead=args.lookahead)
        if args.t is not None:
            overrides["t"] = args.t
        if args.epsilon is not None:
            overrides["epsilon"] = args.epsilon
        if args.mode is not None:
            overrides["mode"] = args.mode
        if args.reps is not None:
            overrides["reps"] = args.reps
        if args.final_reps is not None:
            overrides["final_reps"] = args.final_reps
    else:  # comp / ncomp
        if args.tests is not None:
            overrides["tests"] = args.tests
        if args.command == "ncomp" and getattr(args, "threshold", None) is not None:
            if not 0.0 <= args.threshold <= 1.0:
                raise UsageError("threshold must lie in [0, 1]")
            overrides["threshold"] = args.threshold

    p = getattr(args, "p", None)
    if p is not None:
        if not 0.0 <= p < 0.5:
            raise UsageError("p must lie in (0, 0.5)")
        overrides["p"] = p
    return bench.TrialConfig(
        algorithm=args.command,
        n=args.n,
        k=args.k,
        trials=args.trials,
        base_seed=_seed_of(args),
        hash_mode=args.hash_mode,
        jobs=args.jobs,
        **overrides,
    )


def result_row(result: bench.AggregateResult) -> dict:
    params = result.params or {}
    return {
        "algorithm": result.algorithm,
        "n": result.n,
        "k": result.k,
        "gamma": params.get("gamma", ""),
        "gamma_prime": params.get("gamma_prime", ""),
        "rho": params.get("rho", ""),
        "p": params.get("p", ""),
        "T": result.t_total,
        "trials": result.trials,
        "successes": result.successes,
        "success_rate": repr(result.success_rate),
        "ci_lo": repr(result.ci_lo),
        "ci_hi": repr(result.ci_hi),
        "mean_outcomes_read": repr(result.mean_outcomes_read),
        "max_outcomes_read": result.max_outcomes_read,
        "mean_labels": repr(result.mean_labels),
        "storage_words": result.storage_words,
        "seed": result.seed,
        "hash_mode": result.hash_mode,
    }


def render_csv(rows: list[dict], columns: list[str]) -> str:
    buf = io.StringIO()
    writer = csv.DictWriter(buf, fieldnames=columns, lineterminator="\n")
    writer.writeheader()
    for row in rows:
        writer.writerow(row)
    return buf.getvalue()


def _emit(text: str, out_path: str | None):
    if out_path is None:
        return
    try:
        with open(out_path, "w") as fh:
            fh.write(text)
    except OSError as exc:
        raise RuntimeError(f"cannot write output file {out_path}: {exc}") from exc


def _print_summary(results: list[bench.AggregateResult]):
    cols = ["algorithm", "n", "k", "T", "trials", "success_rate",
            "ci_lo", "ci_hi", "mean_outcomes_read", "storage_words", "error"]
    print("  ".join(f"{c:>18}" for c in cols))
    for r in results:
        row = result_row(r)
        row["error"] = r.error or ""
        vals = []
        for c in cols:
            v = row.get(c, getattr(r, c, ""))
            if isinstance(v, float):
                v = f"{v:.6g}"
            vals.append(f"{str(v):>18}")
        print("  ".join(vals))


def _write_results(results: list[bench.AggregateResult], args) -> None:
    if args.format == "json":
        text = bench.results_to_json(results)
    else:
        text = render_csv([result_row(r) for r in results], RESULT_COLUMNS)
    _emit(text, args.out)


def _run_single(args) -> int:
    config = config_from_args(args)
    result = bench.run_trials(config)
    _print_summary([result])
    _write_results([result], args)
    return 0


def _run_sweep(args) -> int:
    try:
        with open(args.config) as fh:
            plan = json.load(fh)
    except (OSError, json.JSONDecodeError) as exc:
        raise UsageError(f"cannot read sweep config {args.config}: {exc}") from exc
    if not isinstance(plan, dict) or "cells" not in plan:
        raise UsageError('sweep config must be an object with a "cells" list')
    base = dict(plan.get("base", {}))
    if args.seed is not None:
        base["base_seed"] = args.seed
    configs = []
    for cell in plan["cells"]:
        merged = {**base, **cell}
        if "defectives" in merged and merged["defectives"] is not None:
            merged["defectives"] = tuple(merged["defectives"])
        try:
            configs.append(bench.TrialConfig(**merged))
        except TypeError as exc:
            raise UsageError(f"bad sweep cell {cell}: {exc}") from exc
    results = bench.sweep(configs)
    _print_summary(results)
    _write_results(results, args)
    return 0 if all(r.error is None for r in results) else 1


def _run_eta_curve(args) -> int:
    try:
        gammas = [int(g) for g in args.gamma.split(",") if g]
    except ValueError as exc:
        raise UsageError(f"--gamma expects comma-separated integers: {exc}") from exc
    if not gammas or any(g < 3 for g in gammas):
        raise UsageError("eta-curve needs divisibility budgets >= 3")
    if args.theta_steps < 1:
        raise UsageError("--theta-steps must be >= 1")
    rows = bench.eta_curve(gammas, args.theta_steps)
    printable = [{**row, "eta_hat": repr(row["eta_hat"])} for row in rows]
    text = (json.dumps(rows, indent=2) if args.format == "json"
            else render_csv(printable, ETA_COLUMNS))
    print(text, end="" if text.endswith("\n") else "\n")
    _emit(text, args.out)
    return 0


def execute(args: argparse.Namespace) -> int:
    if args.command == "eta-curve":
        return _run_eta_curve(args)
    if args.command == "sweep":
        return _run_sweep(args)
    return _run_single(args)


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    argv = sys.argv[1:] if argv is None else argv
    try:
        args = _apply_config_file(parser, argv)
    except UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    try:
        return execute(args)
    except UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except RuntimeError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except Exception as exc:  # pragma: no cover - unexpected harness failure
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
