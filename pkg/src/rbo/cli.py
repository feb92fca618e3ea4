"""``rbo`` command line.

Exit codes: 0 success, 1 runtime failure, 2 usage error.
"""
from __future__ import annotations

import argparse
import sys
from pathlib import Path
from typing import Sequence

from . import verify
from .bitrev import DomainError, bs_order, level_of_slot, rev_bits
from .nextslot import STRATEGIES, SlotQuery, choose_strategy
from .simulator import MODES, RETRY_POLICIES, rows_to_csv, run_experiment


def _p_list(values: Sequence[str]) -> list[float]:
    out = []
    for v in values:
        for part in v.split(","):
            if part:
                out.append(float(part))
    return out


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="rbo", description=__doc__.splitlines()[0].strip("`"))
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("next-slot", help="first slot after t whose rank is in [r1, r2]")
    p.add_argument("--k", type=int, required=True)
    p.add_argument("--t", type=int, required=True)
    p.add_argument("--r1", type=int, required=True)
    p.add_argument("--r2", type=int, required=True)
    p.add_argument("--strategy", choices=STRATEGIES, default="auto")

    p = sub.add_parser("verify", help="run the oracle suites")
    p.add_argument("--max-k", type=int, default=8)
    p.add_argument("--samples", type=int, default=1000, help="random cases per suite; 0 = exhaustive only")
    p.add_argument("--seed", type=int, default=0)

    p = sub.add_parser("simulate", help="energy/time experiment, written as CSV")
    p.add_argument("--k-min", type=int, default=10)
    p.add_argument("--k-max", type=int, default=16)
    p.add_argument("--p", nargs="+", default=["0.5", "0.75", "1"], help="success probabilities")
    p.add_argument("--trials", type=int, default=1000)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--mode", choices=MODES, default="bare")
    p.add_argument("--retry-policy", choices=RETRY_POLICIES, default="in-interval")
    p.add_argument("--skew", type=float, default=0.0, help="receiver clock rate error (fsm mode)")
    p.add_argument("--workers", type=int, default=1)
    p.add_argument("--out", type=Path, default=None, help="CSV path (default: stdout only)")

    p = sub.add_parser("schedule-dump", help="rank -> slot pairs of one round")
    p.add_argument("--k", type=int, required=True)
    return parser


def cmd_next_slot(args: argparse.Namespace, parser: argparse.ArgumentParser) -> int:
    try:
        q = SlotQuery(args.k, args.t, args.r1, args.r2)
    except DomainError as exc:
        parser.error(str(exc))
    slot = q.solve(args.strategy)
    strategy = choose_strategy(q.k, q.r1, q.r2) if args.strategy == "auto" else args.strategy
    print(slot)
    print(f"tau={q.distance(slot)} rank={rev_bits(q.k, slot)} strategy={strategy}")
    return 0


def cmd_verify(args: argparse.Namespace, parser: argparse.ArgumentParser) -> int:
    if not 0 <= args.max_k <= 25:
        parser.error("--max-k must be in [0, 25]")
    if args.samples < 0:
        parser.error("--samples must be >= 0")
    results = verify.run_all(args.max_k, args.samples, args.seed)
    for r in results:
        print(r.line())
    return 0 if all(r.passed for r in results) else 1


def cmd_simulate(args: argparse.Namespace, parser: argparse.ArgumentParser) -> int:
    try:
        ps = _p_list(args.p)
    except ValueError as exc:
        parser.error(f"--p: {exc}")
    if not 1 <= args.k_min <= args.k_max <= 40:
        parser.error("need 1 <= --k-min <= --k-max <= 40")
    if args.trials < 1 or args.workers < 1:
        parser.error("--trials and --workers must be positive")
    if not ps or any(not 0.0 < p <= 1.0 for p in ps):
        parser.error("probabilities must lie in (0, 1]")
    try:
        rows = run_experiment(
            range(args.k_min, args.k_max + 1),
            ps,
            args.trials,
            args.seed,
            workers=args.workers,
            mode=args.mode,
            retry_policy=args.retry_policy,
            skew=args.skew,
        )
    except DomainError as exc:
        parser.error(str(exc))
    text = rows_to_csv(rows)
    if args.out is not None:
        try:
            args.out.write_text(text, encoding="utf-8")
        except OSError as exc:
            print(f"rbo: cannot write {args.out}: {exc}", file=sys.stderr)
            return 1
    print(f"{'k':>3} {'p':>5} {'energy':>9} {'2k+2':>5} {'slots':>12}")
    for r in rows:
        print(f"{r.k:>3} {r.p:>5g} {r.mean_energy:>9.3f} {2 * r.k + 2:>5} {r.mean_slots:>12.1f}")
    return 0


def cmd_schedule_dump(args: argparse.Namespace, parser: argparse.ArgumentParser) -> int:
    if not 1 <= args.k <= 20:
        parser.error("--k must be in [1, 20]")
    print("rank,slot,level,bs_slot")
    for x in range(1 << args.k):
        slot = rev_bits(args.k, x)
        print(f"{x},{slot},{level_of_slot(slot)},{bs_order(args.k, x)}")
    return 0


_COMMANDS = {
    "next-slot": cmd_next_slot,
    "verify": cmd_verify,
    "simulate": cmd_simulate,
    "schedule-dump": cmd_schedule_dump,
}


def main(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    return _COMMANDS[args.command](args, parser)


if __name__ == "__main__":
    sys.exit(main())
