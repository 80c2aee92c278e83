"""Command-line entry point ``obfx``.

Exit status: 0 success (or the property holds), 1 the property fails and a
witness is printed, 2 usage or precondition error, 3 work budget refused.
"""

from __future__ import annotations

import argparse
import sys
from fractions import Fraction
from pathlib import Path

from . import analysis, extractors, formats, streaming
from .core import BitString
from .experiments import SweepConfig, run_sweep, sample_random_function
from .verify import DEFAULT_BUDGET, BudgetExceeded, verify

EXIT_OK, EXIT_FAILS, EXIT_USAGE, EXIT_BUDGET = 0, 1, 2, 3


def _fraction(text: str) -> Fraction:
    try:
        return Fraction(text)
    except (ValueError, ZeroDivisionError) as exc:
        raise argparse.ArgumentTypeError(f"not a fraction: {text!r}") from exc


def _emit(payload, out: str | None, text: str | None = None):
    body = text if text is not None else formats.dump_json(payload)
    if out:
        Path(out).write_text(body)
    else:
        sys.stdout.write(body)


def _echo(args) -> dict:
    return {k: (str(v) if isinstance(v, Fraction) else v)
            for k, v in sorted(vars(args).items()) if k != "handler"}


def cmd_extract(args) -> int:
    hexstr = args.input.lower().removeprefix("0x")
    value = int(hexstr, 16)
    n = args.n if args.n is not None else 4 * len(hexstr)
    bits = BitString.from_int(value, n)
    if args.construction == "pm-cycle":
        out = extractors.plusminus_cycle_extract(bits, args.m)
        result = {"endpoint": out}
    else:
        out = extractors.extract(args.construction, bits, args.m)
        result = {"output": str(out), "output_int": out.to_int()}
    result["input_bits"] = str(bits)
    _emit({"command": _echo(args), "result": result}, args.out)
    return EXIT_OK


def cmd_verify(args) -> int:
    f = formats.read_table(args.table)
    report = verify(f, args.property, args.k, budget=args.budget)
    payload = {"command": _echo(args), "result": report.to_json()}
    status = EXIT_OK
    if args.eps is not None:
        holds = report.worst_distance <= args.eps
        payload["result"]["holds"] = holds
        status = EXIT_OK if holds else EXIT_FAILS
    _emit(payload, args.out)
    return status


def cmd_attack(args) -> int:
    p = formats.read_program(args.program)
    result = streaming.attack_source(p, args.k)
    report = streaming.attack_report(p, result)
    _emit({"command": _echo(args), "result": report}, args.out)
    return EXIT_OK


def cmd_bound(args) -> int:
    if args.walk is not None:
        k, M = args.walk
        report = analysis.walk_bound_report(k, M)
        _emit({"command": _echo(args), "result": report.to_json()}, args.out)
        return EXIT_OK if report.satisfied else EXIT_FAILS
    if args.chernoff is not None:
        t, eps = int(args.chernoff[0]), Fraction(args.chernoff[1])
        tail = analysis.binomial_tail_exact(t, eps)
        bound = analysis.chernoff_upper(t, eps)
        report = analysis.BoundReport(bound, tail, {"t": t, "eps": str(eps)})
        _emit({"command": _echo(args), "result": report.to_json()}, args.out)
        return EXIT_OK if report.satisfied else EXIT_FAILS
    if args.walk_grid:
        rows = analysis.sandwich_rows(points=args.points, k_max=args.k_max)
        _emit(None, args.out, analysis.sandwich_csv(rows))
        return EXIT_OK if all(r.satisfied for r in rows) else EXIT_FAILS
    if args.converse:
        t_grid = [1 << i for i in range(3, 11)]
        eps_grid = [Fraction(1, 16), Fraction(1, 8), Fraction(1, 4), Fraction(1, 2)]
        report = analysis.converse_regime_report(t_grid, eps_grid)
        _emit(None, args.out, report.to_csv())
        return EXIT_OK
    raise ValueError("bound needs one of --walk, --chernoff, --walk-grid, --converse")


def cmd_sweep(args) -> int:
    config = SweepConfig(
        property=args.property,
        n=args.n,
        m=args.m,
        epsilon=args.eps,
        k_values=tuple(range(args.k_min, args.k_max + 1)),
        trials=args.trials,
        master_seed=args.seed,
        workers=args.workers,
        budget=args.budget,
    )
    result = run_sweep(config)
    _emit(None, args.out, result.to_csv())
    return EXIT_OK


def cmd_gen(args) -> int:
    kind = args.kind
    if kind in ("cycle-add", "fp-chord"):
        if kind == "cycle-add":
            p = streaming.cycle_add_program(args.n, args.M)
        else:
            p = streaming.fp_chord_program(args.n, args.p)
        text = formats.dump_json(formats.program_to_json(p))
        _emit(None, args.out, text)
        return EXIT_OK
    if kind == "parity":
        f = extractors.parity_table(args.n)
    elif kind == "cycle-walk":
        f = extractors.cycle_walk_table(args.n, args.m)
    elif kind == "pm-cycle":
        f = extractors.plusminus_cycle_table(args.n, args.M)
    elif kind == "random":
        f = sample_random_function(args.n, args.m, args.seed)
    else:  # argparse restricts choices
        raise ValueError(kind)
    if args.out is None:
        sys.stdout.write(formats.table_to_hex(f))
    else:
        formats.write_table(f, args.out, hex_text=True if args.hex else None)
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="obfx", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("extract", help="apply an explicit extractor to one input")
    p.add_argument("--construction", choices=["cycle", "parity", "pm-cycle"], required=True)
    p.add_argument("--m", type=int, help="output bits (cycle) or odd cycle size (pm-cycle)")
    p.add_argument("--input", required=True, help="input bits as hex")
    p.add_argument("--n", type=int, help="input length in bits (default: 4 per hex digit)")
    p.add_argument("--out")
    p.set_defaults(handler=cmd_extract)

    p = sub.add_parser("verify", help="exact worst-case distance of a truth table")
    p.add_argument("--property", choices=["rf", "serf", "aerf"], required=True)
    p.add_argument("--k", type=int, required=True)
    p.add_argument("--table", required=True)
    p.add_argument("--eps", type=_fraction, help="exit 1 if the worst distance exceeds this")
    p.add_argument("--budget", type=int, default=DEFAULT_BUDGET)
    p.add_argument("--out")
    p.set_defaults(handler=cmd_verify)

    p = sub.add_parser("attack", help="support-bound attack on a forgetless streaming program")
    p.add_argument("--program", required=True)
    p.add_argument("--k", type=int, required=True)
    p.add_argument("--out")
    p.set_defaults(handler=cmd_attack)

    p = sub.add_parser("bound", help="closed-form bounds against exact values")
    g = p.add_mutually_exclusive_group(required=True)
    g.add_argument("--walk", nargs=2, type=int, metavar=("K", "M"))
    g.add_argument("--chernoff", nargs=2, metavar=("T", "EPS"))
    g.add_argument("--walk-grid", action="store_true", help="CSV over M in {2,4,8,16}")
    g.add_argument("--converse", action="store_true", help="CSV of exact binomial tails")
    p.add_argument("--points", type=int, default=12)
    p.add_argument("--k-max", type=int, default=1 << 20)
    p.add_argument("--out")
    p.set_defaults(handler=cmd_bound)

    p = sub.add_parser("sweep", help="seeded random-function sweep, CSV output")
    p.add_argument("--property", choices=["rf", "serf", "aerf"], required=True)
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--m", type=int, default=1)
    p.add_argument("--eps", type=_fraction, required=True)
    p.add_argument("--k-min", type=int, required=True)
    p.add_argument("--k-max", type=int, required=True)
    p.add_argument("--trials", type=int, required=True)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--workers", type=int, default=1)
    p.add_argument("--budget", type=int, default=DEFAULT_BUDGET)
    p.add_argument("--out")
    p.set_defaults(handler=cmd_sweep)

    p = sub.add_parser("gen", help="write builtin tables and programs")
    p.add_argument("kind", choices=["parity", "cycle-walk", "pm-cycle", "random", "cycle-add", "fp-chord"])
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--m", type=int, default=1)
    p.add_argument("--M", type=int, default=4, help="cycle size (cycle-add, pm-cycle)")
    p.add_argument("--p", type=int, default=3, help="prime (fp-chord)")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--hex", action="store_true", help="write the hex text format")
    p.add_argument("--out")
    p.set_defaults(handler=cmd_gen)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.handler(args)
    except BudgetExceeded as exc:
        print(f"obfx: budget refused: {exc}", file=sys.stderr)
        return EXIT_BUDGET
    except (ValueError, OSError) as exc:
        print(f"obfx: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
