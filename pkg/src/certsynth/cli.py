"""Command-line frontend: ``synth``, ``verify``, ``decompose`` and ``bench``."""

from __future__ import annotations

import argparse
import json
import logging
import sys
import time

from .architecture import ArchitectureError, check
from .automata import AutomatonSizeError
from .benchmarks import FAMILIES, BenchmarkError, generate
from .encoding import EncodingError
from .formats import SpecFormatError, load_spec, read_solution, save_spec, write_solution
from .logic import UnknownAtomError, check_atoms, decompose, relevant_processes, to_text
from .machines import MachineFormatError
from .solving import SolverBackend, SolverError
from .synthesis import Solution, Unknown, synthesize
from .verification import verify_solution

EXIT_OK, EXIT_UNREALIZABLE, EXIT_ERROR, EXIT_VERIFY_FAILED, EXIT_UNKNOWN = 0, 1, 2, 3, 4

_INPUT_ERRORS = (OSError, SpecFormatError, ArchitectureError, UnknownAtomError, MachineFormatError,
                 BenchmarkError, EncodingError, AutomatonSizeError, SolverError, json.JSONDecodeError)


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_ERROR, f"{self.prog}: error: {message}\n")


def _positive(text: str) -> int:
    value = int(text)
    if value < 1:
        raise argparse.ArgumentTypeError("must be a positive integer")
    return value


def _add_synth_options(p: argparse.ArgumentParser) -> None:
    p.add_argument("--max-strategy", type=_positive, default=2)
    p.add_argument("--max-cert", type=_positive, default=2)
    p.add_argument("--mode", choices=("moore", "mealy"), default="moore")
    p.add_argument("--solver", default="builtin", help="'builtin' or the path of a DIMACS solver executable")
    p.add_argument("--timeout", type=float, default=None, help="per-call solver timeout in seconds")
    p.add_argument("--policy", choices=("certificate-first", "strategy-first"), default="certificate-first")
    p.add_argument("--emit-dimacs", metavar="DIR")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="certsynth", description="Certifying synthesis for distributed LTL specifications.")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("synth", help="synthesize strategies and certificates")
    p.add_argument("--spec", required=True)
    _add_synth_options(p)
    p.add_argument("--out", required=True)
    p.add_argument("--format", choices=("dot", "json", "both"), default="both")

    p = sub.add_parser("verify", help="check a solution directory")
    p.add_argument("--spec", required=True)
    p.add_argument("--solution", required=True)

    p = sub.add_parser("decompose", help="print subspecifications and relevant processes")
    p.add_argument("--spec", required=True)

    p = sub.add_parser("bench", help="run a benchmark family")
    p.add_argument("--family", required=True, choices=FAMILIES)
    p.add_argument("--param", required=True)
    _add_synth_options(p)
    p.add_argument("--save-spec", metavar="FILE")
    return parser


def _backend(args) -> SolverBackend:
    return SolverBackend("embedded" if args.solver == "builtin" else args.solver, timeout=args.timeout)


def _run(sf, args):
    return synthesize(sf.arch, sf.spec, args.max_strategy, args.max_cert, policy=args.policy,
                      backend=_backend(args), mode=args.mode, dimacs_dir=args.emit_dimacs)


def _status_code(result) -> int:
    if isinstance(result, Solution):
        return EXIT_OK
    if isinstance(result, Unknown):
        return EXIT_UNKNOWN
    return EXIT_UNREALIZABLE


def cmd_synth(args) -> int:
    sf = load_spec(args.spec)
    result = _run(sf, args)
    if isinstance(result, Solution):
        report = result.report.to_dict() | {"bounds": result.bounds.to_dict(), "attempts": result.stats["attempts"]}
        write_solution(args.out, result, report, args.format)
        if args.format == "dot":
            # verification needs machine files, so JSON is always kept for strategies and certificates
            write_solution(args.out, result, None, "json")
        print(f"realizable with bounds {result.bounds.pair()}; solution written to {args.out}")
    elif isinstance(result, Unknown):
        print(f"solver gave up at bounds {result.bounds.pair()}")
    else:
        print(f"unrealizable up to bounds {result.max_bounds}")
    return _status_code(result)


def cmd_verify(args) -> int:
    sf = load_spec(args.spec)
    check(sf.arch)
    check_atoms(sf.spec, sf.arch)
    sol = read_solution(args.solution, sf.arch)
    try:
        report = verify_solution(sf.arch, sf.spec, sol)
    except ValueError as exc:
        raise MachineFormatError(str(exc)) from exc
    print(json.dumps(report.to_dict(), indent=2))
    return EXIT_OK if report.realizable else EXIT_VERIFY_FAILED


def cmd_decompose(args) -> int:
    sf = load_spec(args.spec)
    check(sf.arch)
    dec = decompose(sf.spec, sf.arch)
    rel = relevant_processes(dec, sf.arch)
    out = {
        name: {"conjuncts": [to_text(c) for c in dec[name].conjuncts], "relevant": sorted(rel[name])}
        for name in sf.arch.names
    }
    print(json.dumps(out, indent=2))
    return EXIT_OK


def cmd_bench(args) -> int:
    sf = generate(args.family, args.param)
    if args.save_spec:
        save_spec(args.save_spec, sf)
    started = time.monotonic()
    result = _run(sf, args)
    elapsed = time.monotonic() - started
    attempts = result.stats["attempts"] if isinstance(result, Solution) else result.attempts
    final = attempts[-1] if attempts else {}
    row = {
        "family": args.family, "param": args.param, "status": result.status,
        "bounds": f"{final.get('strategy')},{final.get('certificate')}", "attempts": len(attempts),
        "variables": final.get("variables", 0), "clauses": final.get("clauses", 0),
        "seconds": round(elapsed, 3),
    }
    print("\t".join(f"{k}={v}" for k, v in row.items()))
    return _status_code(result)


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(message)s")
    handler = {"synth": cmd_synth, "verify": cmd_verify, "decompose": cmd_decompose, "bench": cmd_bench}[args.command]
    try:
        return handler(args)
    except _INPUT_ERRORS as exc:
        print(f"certsynth: error: {exc}", file=sys.stderr)
        return EXIT_ERROR


if __name__ == "__main__":
    sys.exit(main())
