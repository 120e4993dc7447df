"""Command-line entry point: ``qautomaton {compile,run,verify,cost,thermal}``.

Exit codes: 0 success, 2 input diagnostics, 3 resource limits, 4 internal
invariant violations.
"""
from __future__ import annotations

import argparse
import json
import sys
import warnings
from collections import Counter
from pathlib import Path

from .circuit import CircuitParseError, Diagnostic, parse
from .compiler import CompileError, LoadOrderWarning, compile_circuit
from .isa import Program, ProgramError, cost
from .lattice import LatticeError, LatticeSpec, total_spins
from .simulator import ConduitPurityError, SimulationSizeError, dump_amplitudes, run, verify
from .thermal import ensemble_yield, parse_grid, thermal_table, threshold_x

EXIT_OK, EXIT_INPUT, EXIT_RESOURCE, EXIT_INTERNAL = 0, 2, 3, 4


class _Fail(Exception):
    def __init__(self, code: int, diagnostics: list[Diagnostic]):
        self.code = code
        self.diagnostics = diagnostics


def _units(text: str) -> tuple[int, int, int]:
    try:
        parts = tuple(int(v) for v in text.split(","))
    except ValueError:
        raise argparse.ArgumentTypeError(f"units must be Nx,Ny,Nz, got {text!r}") from None
    if len(parts) != 3:
        raise argparse.ArgumentTypeError(f"units must be Nx,Ny,Nz, got {text!r}")
    return parts


def _add_spec_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--units", type=_units, default=(4, 1, 1), help="ABC units per axis, e.g. 4,1,1")
    p.add_argument("--detune-radius", type=int, default=1)
    p.add_argument("--pulse-sets", type=int, default=2, help="pulse sets billed per global stage")


def _add_output_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--json", action="store_true", help="machine-readable output and diagnostics")
    p.add_argument("--pretty", action="store_true", help="indent JSON output")


def _spec(args) -> LatticeSpec:
    return LatticeSpec(args.units, args.detune_radius, args.pulse_sets)


def _dump(obj, args) -> str:
    return json.dumps(obj, indent=2 if args.pretty else None)


def _write(text: str, out: str | None) -> None:
    if out:
        Path(out).write_text(text + "\n")
    else:
        print(text)


def _read(path: str) -> str:
    try:
        return Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise _Fail(EXIT_INPUT, [Diagnostic(0, f"cannot read {path}: {exc.strerror}")]) from None


def _load_program(path: str) -> Program:
    try:
        return Program.from_json(_read(path))
    except json.JSONDecodeError as exc:
        raise _Fail(EXIT_INPUT, [Diagnostic(exc.lineno, f"invalid program JSON: {exc.msg}")]) from None


def _compile(args):
    ir = parse(_read(args.circuit))
    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter("always", LoadOrderWarning)
        program = compile_circuit(
            ir, _spec(args), elide_trivial=getattr(args, "elide_trivial", False), cnot_in_d=args.cnot_in_d
        )
    notes = [Diagnostic(0, str(w.message), "warning") for w in caught if issubclass(w.category, LoadOrderWarning)]
    return ir, program, notes


def cmd_compile(args) -> list[Diagnostic]:
    _, program, notes = _compile(args)
    _write(program.to_json(indent=2 if args.pretty else None), args.out)
    return notes


def cmd_run(args) -> list[Diagnostic]:
    program = _load_program(args.program)
    if args.shots < 1:
        raise _Fail(EXIT_INPUT, [Diagnostic(0, "--shots must be >= 1")])
    results = []
    counts: Counter[str] = Counter()
    for k in range(args.shots):
        keep = args.state or (k == 0 and args.dump_state)
        res = run(program, args.seed + k, keep_state=bool(keep), max_spins_=args.max_spins)
        if k == 0 and args.dump_state:
            dump_amplitudes(res.final_state, args.dump_state)
        results.append(res.to_dict(include_state=args.state))
        counts["".join(map(str, res.records))] += 1
    _write(_dump({"results": results, "counts": dict(sorted(counts.items()))}, args), args.out)
    return []


def cmd_verify(args) -> list[Diagnostic]:
    ir = parse(_read(args.circuit))
    report = verify(
        ir, _spec(args), trials=args.trials, seed=args.seed, shots=args.shots, cnot_in_d=args.cnot_in_d
    )
    if args.json:
        _write(_dump(report.to_dict(), args), None)
    else:
        print(f"fidelity {report.min_fidelity:.9f} (min over {len(report.fidelities)} trial(s))")
        if report.shots:
            print(
                f"records: {report.shots} shots, agreement {report.record_agreement:.4f}, "
                f"total variation {report.total_variation:.4f}"
            )
    return []


def cmd_cost(args) -> list[Diagnostic]:
    report = cost(_load_program(args.program))
    _write(_dump(report.to_dict(), args), args.out)
    return []


def cmd_thermal(args) -> list[Diagnostic]:
    spec = _spec(args)
    try:
        xs = parse_grid(args.x_grid)
    except ValueError as exc:
        raise _Fail(EXIT_INPUT, [Diagnostic(0, str(exc))]) from None
    rows = thermal_table(spec, xs)
    if args.automata:
        for row in rows:
            row["expected_working"] = ensemble_yield(args.automata, spec, row["x"]).expected_working
    out = {"spec": spec.to_dict(), "total_spins": total_spins(spec), "threshold_x": threshold_x(spec), "rows": rows}
    _write(_dump(out, args), args.out)
    return []


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="qautomaton", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("compile", help="lower a .qct circuit to program JSON")
    p.add_argument("circuit")
    _add_spec_flags(p)
    p.add_argument("--out")
    p.add_argument("--elide-trivial", action="store_true", help="drop identity single-qubit gates")
    p.add_argument("--cnot-in-d", choices=("control", "target"), default="control")
    _add_output_flags(p)
    p.set_defaults(func=cmd_compile)

    p = sub.add_parser("run", help="simulate a program")
    p.add_argument("program")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--shots", type=int, default=1)
    p.add_argument("--state", action="store_true", help="include final amplitudes in the JSON")
    p.add_argument("--dump-state", help="write shot 0's amplitudes as little-endian complex128")
    p.add_argument("--max-spins", type=int, default=None)
    p.add_argument("--out")
    _add_output_flags(p)
    p.set_defaults(func=cmd_run)

    p = sub.add_parser("verify", help="check a circuit's compiled program against the oracle")
    p.add_argument("circuit")
    _add_spec_flags(p)
    p.add_argument("--trials", type=int, default=1)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--shots", type=int, default=200)
    p.add_argument("--cnot-in-d", choices=("control", "target"), default="control")
    _add_output_flags(p)
    p.set_defaults(func=cmd_verify)

    p = sub.add_parser("cost", help="pulse-cost report for a program")
    p.add_argument("program")
    p.add_argument("--out")
    _add_output_flags(p)
    p.set_defaults(func=cmd_cost)

    p = sub.add_parser("thermal", help="initialization yield over an x grid")
    _add_spec_flags(p)
    p.add_argument("--x-grid", default="0:12:0.5", help="start:stop:step or comma list")
    p.add_argument("--automata", type=int, default=0, help="ensemble size for expected working counts")
    p.add_argument("--out")
    _add_output_flags(p)
    p.set_defaults(func=cmd_thermal)
    return parser


def _report(diagnostics: list[Diagnostic], as_json: bool) -> None:
    if not diagnostics:
        return
    if as_json:
        print(json.dumps([d.to_dict() for d in diagnostics]), file=sys.stderr)
    else:
        for d in diagnostics:
            print(d, file=sys.stderr)


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    as_json = getattr(args, "json", False)
    try:
        notes = args.func(args)
    except _Fail as exc:
        _report(exc.diagnostics, as_json)
        return exc.code
    except CircuitParseError as exc:
        _report(exc.diagnostics, as_json)
        return EXIT_INPUT
    except (CompileError, ProgramError, LatticeError) as exc:
        _report([Diagnostic(0, str(exc))], as_json)
        return EXIT_INPUT
    except SimulationSizeError as exc:
        _report([Diagnostic(0, str(exc))], as_json)
        return EXIT_RESOURCE
    except ConduitPurityError as exc:
        _report([Diagnostic(0, str(exc), "internal")], as_json)
        return EXIT_INTERNAL
    _report(notes, as_json)
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
