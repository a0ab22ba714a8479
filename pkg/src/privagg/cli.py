"""Command-line interface.

Subcommands:
    aggregate  votes JSONL -> noisy labels + privacy ledger
    account    ledger JSONL -> (epsilon, delta) guarantee JSON
    simulate   synthetic ensemble sweeps (CSV) and budget reports (JSON)
    verify     oracle soundness suite -> verification report JSON
    report     human-readable tables from sweep CSV / guarantee JSON

Exit codes: 0 success, 1 input error, 2 bound violation (verify only).
All randomness derives from --seed; rerunning a command with the same
inputs and seed reproduces its outputs byte for byte.
"""
from __future__ import annotations

import argparse
import json
import math
import sys

from .accountant import LambdaGrid, PrivacyLedger, per_query_moment
from .accountant import moments_guarantee, strong_composition_eps
from .formats import (
    FileFormatError,
    FORMAT_VERSION,
    VoteRecord,
    dump_json,
    guarantee_to_obj,
    provenance,
    read_ledger,
    read_votes,
    write_json,
    write_labels,
    write_ledger,
    write_sweep_csv,
)
from .mechanism import MechanismParams, noisy_argmax
from .seeding import derive_rng, MECHANISM_NOISE
from .simulation import BudgetReport, EnsembleConfig, ErrorModel, budget_report, sweep_gamma
from .verification import run_verification

EXIT_OK = 0
EXIT_INPUT_ERROR = 1
EXIT_BOUND_VIOLATION = 2


def aggregate_votes(records: list[VoteRecord], gamma: float, seed: int,
                    grid: LambdaGrid) -> tuple[list[tuple[str, int]], PrivacyLedger]:
    """Label every vote record with the noisy argmax and book its moments.

    The noise stream for record i derives from (seed, mechanism-noise, i),
    so the output is a pure function of (records, gamma, seed, grid).  The
    CLI 'aggregate' subcommand is exactly this plus file IO.
    """
    params = MechanismParams(gamma=gamma, seed=seed)
    ledger = PrivacyLedger(gamma=params.gamma, lambda_grid=grid, seed=seed)
    labels = []
    for i, record in enumerate(records):
        rng = derive_rng(seed, MECHANISM_NOISE, i)
        labels.append((record.query_id, noisy_argmax(record.histogram, params, rng=rng)))
        ledger.append(per_query_moment(record.histogram, params.gamma, grid,
                                       query_id=record.query_id))
    return labels, ledger


def account_obj(ledger: PrivacyLedger, delta: float) -> dict:
    """Guarantee JSON object for a ledger: moments plus the baseline."""
    num_queries = len(ledger)
    moments = moments_guarantee(ledger, delta)
    strong = strong_composition_eps(ledger.gamma, num_queries, delta)
    obj = provenance(ledger.gamma, ledger.lambda_grid, ledger.seed)
    obj["noise_scale"] = 1.0 / ledger.gamma
    obj["moments"] = guarantee_to_obj(moments, ledger.lambda_grid, num_queries)
    obj["strong_composition"] = guarantee_to_obj(strong, ledger.lambda_grid, num_queries)
    return obj


def budget_report_obj(report: BudgetReport, config: EnsembleConfig) -> dict:
    obj = provenance(report.gamma, report.lambda_grid, config.seed)
    obj.update({
        "noise_scale": 1.0 / report.gamma,
        "delta": report.delta,
        "num_queries": report.num_queries,
        "aggregate_accuracy": None if math.isnan(report.aggregate_accuracy)
                              else report.aggregate_accuracy,
        "ensemble": {
            "n": config.n,
            "m": config.m,
            "teacher_accuracy": config.teacher_accuracy,
            "error_model": config.error_model.value,
        },
        "alpha_totals": {str(k): v for k, v in sorted(report.totals.items())},
        "moments": guarantee_to_obj(report.moments, report.lambda_grid,
                                    report.num_queries),
        "strong_composition": guarantee_to_obj(report.strong_composition,
                                               report.lambda_grid, report.num_queries),
    })
    return obj


def _cmd_aggregate(args) -> int:
    records = read_votes(args.votes)
    grid = LambdaGrid.up_to(args.lambda_max)
    if not records:
        print(f"warning: {args.votes} contains no vote records; "
              "writing header-only outputs", file=sys.stderr)
    labels, ledger = aggregate_votes(records, args.gamma, args.seed, grid)
    header = provenance(args.gamma, grid, args.seed)
    write_labels(args.labels_out, header, labels)
    write_ledger(args.ledger_out, ledger)
    print(f"aggregated {len(labels)} queries at gamma={args.gamma} "
          f"(noise scale 1/gamma = {1.0 / args.gamma:g}) -> "
          f"{args.labels_out}, {args.ledger_out}", file=sys.stderr)
    return EXIT_OK


def _cmd_account(args) -> int:
    ledger = read_ledger(args.ledger)
    if not 0.0 < args.delta < 1.0:
        raise ValueError(f"--delta must lie strictly inside (0, 1), got {args.delta}")
    obj = account_obj(ledger, args.delta)
    text = dump_json(obj)
    if args.output:
        with open(args.output, "w", encoding="utf-8") as fh:
            fh.write(text)
        print(f"guarantee for {len(ledger)} queries -> {args.output}", file=sys.stderr)
    else:
        sys.stdout.write(text)
    return EXIT_OK


def _make_config(args) -> EnsembleConfig:
    return EnsembleConfig(
        n=args.n, m=args.m, teacher_accuracy=args.teacher_accuracy,
        error_model=ErrorModel(args.error_model), queries=args.queries,
        seed=args.seed)


def _cmd_simulate(args) -> int:
    config = _make_config(args)
    if args.mode == "sweep":
        if not args.gammas:
            raise ValueError("--gammas is required for --mode sweep")
        grid = [float(g) for g in args.gammas.split(",")]
        result = sweep_gamma(config, grid)
        header = {
            "format_version": FORMAT_VERSION, "seed": config.seed,
            "gamma_grid": grid, "n": config.n, "m": config.m,
            "teacher_accuracy": config.teacher_accuracy,
            "queries": config.queries,
        }
        write_sweep_csv(args.output, result, header)
        print(f"swept {len(grid)} gamma values over {config.queries} queries "
              f"-> {args.output}", file=sys.stderr)
    else:
        if args.gamma is None:
            raise ValueError("--gamma is required for --mode budget")
        report = budget_report(config, args.gamma, args.delta,
                               grid=LambdaGrid.up_to(args.lambda_max))
        write_json(args.output, budget_report_obj(report, config))
        print(f"budget report for {config.queries} queries at gamma={args.gamma} "
              f"-> {args.output}", file=sys.stderr)
    return EXIT_OK


def _cmd_verify(args) -> int:
    report = run_verification(num_cases=args.cases, trials=args.trials,
                              mc_cases=args.mc_cases, seed=args.seed,
                              grid=LambdaGrid.up_to(args.lambda_max))
    obj = {"format_version": FORMAT_VERSION, "seed": args.seed,
           "lambda_grid": list(range(1, args.lambda_max + 1))}
    obj.update(report.to_dict())
    text = dump_json(obj)
    if args.output:
        with open(args.output, "w", encoding="utf-8") as fh:
            fh.write(text)
        print(f"verification report -> {args.output}", file=sys.stderr)
    else:
        sys.stdout.write(text)
    if report.failures:
        print(f"verification FAILED: {report.failures} bound violations "
              f"(max violation {report.max_violation:.3e})", file=sys.stderr)
        return EXIT_BOUND_VIOLATION
    return EXIT_OK


def _format_guarantee_rows(obj: dict) -> list[tuple[str, str, str, str]]:
    rows = []
    for key in ("moments", "strong_composition"):
        if key in obj:
            g = obj[key]
            lam = g.get("argmin_lambda")
            rows.append((g["method"], f"{g['epsilon']:.4f}", f"{g['delta']:g}",
                         "-" if lam is None else str(lam)))
    return rows


def _cmd_report(args) -> int:
    path = str(args.file)
    if path.endswith(".csv"):
        with open(path, "r", encoding="utf-8") as fh:
            lines = [ln.rstrip("\n") for ln in fh if ln.strip()]
        body = [ln for ln in lines if not ln.startswith("#")]
        print(f"sweep table from {path}:")
        for ln in body:
            cells = ln.split(",")
            print("  " + "".join(c.ljust(22) for c in cells))
        return EXIT_OK
    with open(path, "r", encoding="utf-8") as fh:
        obj = json.load(fh)
    rows = _format_guarantee_rows(obj)
    if not rows:
        raise ValueError(f"{path} holds neither guarantees nor a sweep table")
    print(f"privacy guarantees from {path}:")
    if "gamma" in obj:
        print(f"  gamma = {obj['gamma']:g}  (noise scale 1/gamma = {1.0 / obj['gamma']:g})")
    if obj.get("num_queries") is not None:
        print(f"  queries = {obj['num_queries']}")
    elif "moments" in obj:
        print(f"  queries = {obj['moments'].get('num_queries')}")
    if obj.get("aggregate_accuracy") is not None:
        print(f"  aggregate accuracy = {obj['aggregate_accuracy']:.4f}")
    print("  {:<20}{:>10}{:>10}  {}".format("method", "epsilon", "delta", "lambda*"))
    for method, eps, delta, lam in rows:
        print(f"  {method:<20}{eps:>10}{delta:>10}  {lam}")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="privagg",
        description="Noisy-max vote aggregation with moments-based privacy accounting.")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("aggregate", help="label queries and write a privacy ledger")
    p.add_argument("votes", help="votes JSONL file")
    p.add_argument("--gamma", type=float, required=True,
                   help="inverse noise scale (Laplace scale is 1/gamma)")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--lambda-max", type=int, default=8, dest="lambda_max")
    p.add_argument("--labels-out", required=True, dest="labels_out")
    p.add_argument("--ledger-out", required=True, dest="ledger_out")
    p.set_defaults(func=_cmd_aggregate)

    p = sub.add_parser("account", help="convert a ledger into an (epsilon, delta) guarantee")
    p.add_argument("ledger", help="ledger JSONL file")
    p.add_argument("--delta", type=float, required=True)
    p.add_argument("--output", help="also write the guarantee JSON here")
    p.set_defaults(func=_cmd_account)

    p = sub.add_parser("simulate", help="synthetic-ensemble sweeps and budget reports")
    p.add_argument("--mode", choices=("sweep", "budget"), default="budget")
    p.add_argument("--n", type=int, default=250, help="number of teachers")
    p.add_argument("--m", type=int, default=10, help="number of classes")
    p.add_argument("--teacher-accuracy", type=float, default=0.8386,
                   dest="teacher_accuracy")
    p.add_argument("--error-model", choices=[e.value for e in ErrorModel],
                   default=ErrorModel.UNIFORM_CONFUSION.value, dest="error_model")
    p.add_argument("--queries", type=int, default=100)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--gamma", type=float, help="single gamma (budget mode)")
    p.add_argument("--gammas", help="comma-separated ascending gammas (sweep mode)")
    p.add_argument("--delta", type=float, default=1e-5)
    p.add_argument("--lambda-max", type=int, default=8, dest="lambda_max")
    p.add_argument("--output", required=True)
    p.set_defaults(func=_cmd_simulate)

    p = sub.add_parser("verify", help="run the oracle soundness suite")
    p.add_argument("--cases", type=int, default=1000,
                   help="random histograms for the bound-soundness sweep")
    p.add_argument("--trials", type=int, default=100_000,
                   help="Monte Carlo trials per cross-check case (0 skips MC)")
    p.add_argument("--mc-cases", type=int, default=100, dest="mc_cases")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--lambda-max", type=int, default=8, dest="lambda_max")
    p.add_argument("--output", help="also write the report JSON here")
    p.set_defaults(func=_cmd_verify)

    p = sub.add_parser("report", help="pretty-print a sweep CSV or guarantee JSON")
    p.add_argument("file")
    p.set_defaults(func=_cmd_report)

    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (FileFormatError, ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT_ERROR


if __name__ == "__main__":
    sys.exit(main())
