"""Command-line front end: analyze, simulate, breakeven, sweep.

Exit codes: 0 ok, 2 scenario/config error, 3 domain error (for example a
divisibility or range violation), 4 ledger-versus-formula mismatch. The
environment variable SPLITFED_SEED overrides the scenario seed.

CSV output is byte-stable across runs: integers verbatim, reals with 12
significant digits, "\n" line endings.
"""

from __future__ import annotations

import argparse
import math
import os
import sys
from fractions import Fraction

from . import protocol_sim
from .cost_model import (
    CommReport,
    Method,
    ScenarioParams,
    break_even_curve,
    efficiency_ratio,
    federated_comm,
    split_comm_nosync,
    split_comm_sync,
    sweep,
)
from .errors import InvalidParam, ScenarioError, SplitFedError
from .nn_core import random_dataset
from .protocol_sim import MessageKind, SplitVariant
from .scenarios import VARIANT_TO_METHOD, Scenario, load_scenario, load_suite
from .svg import render_breakeven_svg

# cmd_simulate refuses anything bigger than this; the simulator moves real
# tensors and is meant for desk-scale cross-checks, not production training.
SIMULATE_MAX_PARAMS = 10**6
SIMULATE_MAX_RECORDS = 10**5

CSV_HEADER = [
    "method", "K", "N", "p", "q", "eta", "epochs",
    "per_client_scalars", "total_scalars", "per_client_bytes", "total_bytes",
    "rho", "winner",
]


def _fmt(x) -> str:
    if isinstance(x, Fraction):
        x = float(x)
    if isinstance(x, bool):
        return str(x)
    if isinstance(x, int):
        return str(x)
    if isinstance(x, float):
        if math.isinf(x):
            return "inf"
        if math.isnan(x):
            return "nan"
        if x == int(x) and abs(x) < 1e15:
            return str(int(x))
        return format(x, ".12g")
    return str(x)


def _write_csv_lines(path: str, header: list[str], rows: list[list]) -> None:
    with open(path, "w", encoding="utf-8", newline="") as fh:
        fh.write(",".join(header) + "\n")
        for row in rows:
            fh.write(",".join(_fmt(v) for v in row) + "\n")


def _report_rows(params: ScenarioParams, reports: dict[Method, CommReport], rho, winner) -> list[list]:
    rows = []
    for method in (Method.SPLIT_SYNC, Method.SPLIT_NOSYNC, Method.FEDERATED):
        r = reports[method]
        rows.append([
            method.value,
            params.clients, params.model_params, params.dataset_size,
            params.smashed_size, params.client_fraction, params.epochs,
            r.per_client_scalars, r.total_scalars, r.per_client_bytes, r.total_bytes,
            rho, winner,
        ])
    return rows


def _error_rows(values: dict, message: str) -> list[list]:
    return [[
        "Error",
        values.get("clients", ""), values.get("model_params", ""),
        values.get("dataset_size", ""), values.get("smashed_size", ""),
        values.get("client_fraction", ""), values.get("epochs", ""),
        "", "", "", "", "", message,
    ]]


def _load(source: str) -> Scenario:
    sc = load_scenario(source)
    env_seed = os.environ.get("SPLITFED_SEED")
    if env_seed is not None:
        try:
            sc.seed = int(env_seed)
        except ValueError as exc:
            raise ScenarioError(f"SPLITFED_SEED must be an integer, got {env_seed!r}") from exc
    return sc


def _comparison_method(variant: str) -> Method:
    if variant == "federated":
        # A federated "scenario variant" still compares the sync split formula.
        return Method.SPLIT_SYNC
    return VARIANT_TO_METHOD[variant]


def cmd_analyze(args) -> int:
    sc = _load(args.scenario)
    variant = args.variant or sc.variant
    params = sc.params()
    strict = not args.lenient_shards
    reports = {
        Method.SPLIT_SYNC: split_comm_sync(params, strict=strict, include_labels=args.include_labels),
        Method.SPLIT_NOSYNC: split_comm_nosync(params, strict=strict, include_labels=args.include_labels),
        Method.FEDERATED: federated_comm(params),
    }
    eff = efficiency_ratio(params, _comparison_method(variant))

    print(
        f"scenario {sc.name}: K={_fmt(params.clients)} N={_fmt(params.model_params)} "
        f"p={_fmt(params.dataset_size)} q={_fmt(params.smashed_size)} "
        f"eta={_fmt(params.client_fraction)} epochs={params.epochs}"
    )
    print(f"{'method':<14} {'per-client':>16} {'total':>16} {'per-client bytes':>18} {'total bytes':>16}")
    for method in (Method.SPLIT_SYNC, Method.SPLIT_NOSYNC, Method.FEDERATED):
        r = reports[method]
        print(
            f"{method.value:<14} {r.per_client_scalars:>16} {r.total_scalars:>16} "
            f"{r.per_client_bytes:>18} {r.total_bytes:>16}"
        )
    print(f"rho ({_comparison_method(variant).value} vs Federated) = {_fmt(eff.rho)}  winner: {eff.winner.value}")

    if args.csv:
        _write_csv_lines(args.csv, CSV_HEADER, _report_rows(params, reports, eff.rho, eff.winner.value))
        print(f"wrote {args.csv}")
    return 0


def cmd_simulate(args) -> int:
    sc = _load(args.scenario)
    if not sc.is_model_form:
        raise ScenarioError("simulate needs a model-form scenario (layer_widths + cut_index)")
    variant_name = args.variant or sc.variant
    params = sc.params()
    if params.model_params > SIMULATE_MAX_PARAMS or params.dataset_size > SIMULATE_MAX_RECORDS:
        raise InvalidParam(
            f"scenario too large to simulate (N={params.model_params} > {SIMULATE_MAX_PARAMS} "
            f"or p={params.dataset_size} > {SIMULATE_MAX_RECORDS})"
        )
    strict = not args.lenient_shards
    x, y = random_dataset(sc.model, params.dataset_size, sc.seed)
    shards = protocol_sim.partition_dataset(x, y, params.clients, strict=strict)

    if variant_name == "federated":
        run = protocol_sim.run_federated_training(
            sc.model, shards, rounds=sc.epochs, local_lr=args.lr, seed=sc.seed, batch_size=sc.batch_size
        )
        losses = run.round_losses
        verify_variant = Method.FEDERATED
    else:
        split_variant = {
            "sync": SplitVariant.SYNC_EPOCH,
            "sync_batch": SplitVariant.SYNC_BATCH,
            "nosync": SplitVariant.ALTERNATING,
        }[variant_name]
        run = protocol_sim.run_split_training(
            sc.model, sc.cut_index, shards, split_variant,
            epochs=sc.epochs, lr=args.lr, seed=sc.seed, batch_size=sc.batch_size,
        )
        losses = run.epoch_losses
        verify_variant = split_variant

    ledger = run.ledger
    if args.inject_fault:
        # verification self-test: one bogus message must trip a mismatch
        ledger.append(protocol_sim.Message(0, protocol_sim.client_id(1), protocol_sim.SERVER,
                                           MessageKind.ACTIVATIONS, params.smashed_size))

    if args.csv:
        ledger.to_csv(args.csv)
        print(f"wrote {args.csv}")
    if args.loss_csv:
        _write_csv_lines(args.loss_csv, ["epoch", "loss"], [[i, loss] for i, loss in enumerate(losses)])
        print(f"wrote {args.loss_csv}")

    exclude = () if args.include_labels else (MessageKind.LABELS,)
    measured = protocol_sim.measured_comm(ledger, params.clients, exclude=exclude,
                                          bytes_per_scalar=params.bytes_per_scalar)
    verdict = protocol_sim.verify_against_model(
        ledger, params, verify_variant, shard_sizes_override=shards.sizes, batch_size=sc.batch_size
    )

    print(f"scenario {sc.name}: variant={variant_name} K={params.clients} p={params.dataset_size} "
          f"epochs={sc.epochs} seed={sc.seed}")
    totals = ledger.totals_by_kind()
    print("traffic by kind (scalars): " + " ".join(f"{k.value}={totals[k]}" for k in MessageKind))
    print(f"measured total ({'labels included' if args.include_labels else 'labels excluded'}): "
          f"{measured.total_scalars} scalars, {measured.total_bytes} bytes; "
          f"per client max {measured.per_client_scalars} scalars")
    print(f"verification: {verdict.describe()}")
    return 0 if verdict.matches else 4


def _parse_k_range(text: str) -> list[int]:
    """A:B:STEP (arithmetic, inclusive), A:B:xF (geometric), or a comma list."""
    text = text.strip()
    try:
        if ":" not in text:
            values = [int(v) for v in text.split(",") if v.strip()]
        else:
            parts = text.split(":")
            if len(parts) == 2:
                parts.append("1")
            if len(parts) != 3:
                raise ValueError(f"expected A:B:STEP, got {text!r}")
            lo, hi = int(parts[0]), int(parts[1])
            step = parts[2].strip()
            values = []
            if step.lower().startswith("x"):
                factor = int(step[1:])
                if factor < 2:
                    raise ValueError("geometric step must be >= 2")
                k = lo
                while k <= hi:
                    values.append(k)
                    k *= factor
            else:
                stride = int(step)
                if stride < 1:
                    raise ValueError("step must be >= 1")
                values = list(range(lo, hi + 1, stride))
    except ValueError as exc:
        raise InvalidParam(f"bad K range {text!r}: {exc}") from exc
    if not values or any(v < 1 for v in values):
        raise InvalidParam(f"K range {text!r} yields no valid client counts")
    return values


def cmd_breakeven(args) -> int:
    if args.scenario:
        params = _load(args.scenario).params()
        p, q, eta = params.dataset_size, params.smashed_size, params.client_fraction
    else:
        p = q = eta = None
    if args.p is not None:
        p = args.p
    if args.q is not None:
        q = args.q
    if args.eta is not None:
        eta = args.eta
    if p is None or q is None or eta is None:
        raise ScenarioError("breakeven needs p, q and eta (via --scenario or --p/--q/--eta)")

    variant = Method.SPLIT_SYNC if (args.variant or "sync") == "sync" else Method.SPLIT_NOSYNC
    ks = _parse_k_range(args.k_range)
    curve = break_even_curve(p, q, eta, ks, variant)

    print(f"break-even curve: p={_fmt(p)} q={_fmt(q)} eta={_fmt(eta)} variant={variant.value}")
    for k, n_star in curve.points:
        print(f"  K={k:<10} N*={_fmt(n_star)}")
    if args.csv:
        _write_csv_lines(args.csv, ["K", "N_break_even"], [[k, n] for k, n in curve.points])
        print(f"wrote {args.csv}")
    if args.svg:
        render_breakeven_svg(curve, args.svg)
        print(f"wrote {args.svg}")
    return 0


def cmd_sweep(args) -> int:
    scenarios = load_suite(args.scenario)
    env_seed = os.environ.get("SPLITFED_SEED")
    if env_seed is not None:
        for sc in scenarios:
            sc.seed = int(env_seed)
    strict = not args.lenient_shards
    rows_out: list[list] = []
    cells = 0
    for sc in scenarios:
        variant = args.variant or sc.variant
        method = _comparison_method(variant)
        for row in sweep(sc.grid(), variant=method, strict=strict, include_labels=args.include_labels):
            cells += 1
            if row.error is not None:
                rows_out.extend(_error_rows(row.values, row.error))
            else:
                rows_out.extend(
                    _report_rows(row.params, row.reports, row.efficiency.rho, row.efficiency.winner.value)
                )
    print(f"swept {cells} parameter combinations ({len(rows_out)} CSV rows)")
    if args.csv:
        _write_csv_lines(args.csv, CSV_HEADER, rows_out)
        print(f"wrote {args.csv}")
    else:
        print(",".join(CSV_HEADER))
        for row in rows_out:
            print(",".join(_fmt(v) for v in row))
    return 0


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="splitfed",
        description="Communication cost analysis and simulation of split versus federated training.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p, scenario_required=True):
        p.add_argument("--scenario", required=scenario_required,
                       help="scenario file path or built-in name")
        p.add_argument("--variant", choices=["sync", "nosync"], default=None,
                       help="split variant to compare (default: scenario's)")
        p.add_argument("--include-labels", action="store_true",
                       help="count label transfers too")
        p.add_argument("--lenient-shards", action="store_true",
                       help="allow p not divisible by K (remainder to the first clients)")
        p.add_argument("--csv", metavar="PATH", default=None, help="write results as CSV")

    p_analyze = sub.add_parser("analyze", help="closed-form reports and the winner for one scenario")
    common(p_analyze)
    p_analyze.set_defaults(func=cmd_analyze)

    p_sim = sub.add_parser("simulate", help="run the protocol simulator and cross-check the ledger")
    common(p_sim)
    p_sim.add_argument("--loss-csv", metavar="PATH", default=None, help="write per-epoch loss CSV")
    p_sim.add_argument("--lr", type=float, default=0.01, help="SGD learning rate (default 0.01)")
    p_sim.add_argument("--inject-fault", action="store_true",
                       help="append one bogus message before verification (self-test)")
    p_sim.set_defaults(func=cmd_simulate)

    p_be = sub.add_parser("breakeven", help="break-even model size over a range of client counts")
    common(p_be, scenario_required=False)
    p_be.add_argument("--p", type=int, default=None, help="dataset size")
    p_be.add_argument("--q", type=int, default=None, help="smashed layer width")
    p_be.add_argument("--eta", type=float, default=None, help="client-side parameter fraction")
    p_be.add_argument("--k-range", required=True,
                      help="client counts: A:B:STEP, A:B:xF (geometric), or comma list")
    p_be.add_argument("--svg", metavar="PATH", default=None, help="write an SVG plot")
    p_be.set_defaults(func=cmd_breakeven)

    p_sweep = sub.add_parser("sweep", help="evaluate a parameter grid or a built-in suite")
    common(p_sweep)
    p_sweep.set_defaults(func=cmd_sweep)
    return parser


def main(argv=None) -> int:
    args = _build_parser().parse_args(argv)
    try:
        return args.func(args)
    except ScenarioError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except SplitFedError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
