"""Logical circuits and the line-based ``.qct`` text format.

::

    # comment
    qubits 2
    h 0
    rx 1 0.5
    cnot 0 1
    measure 0

The first non-comment line declares the register size. Each following line is
one op: a lowercase gate name, the qubit operand(s), then any angle parameters
in radians. ``load q [gate params...]`` prepares a fresh qubit through the
donor port; a bare ``load q`` loads ``|0>``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Union

import numpy as np

ONE_QUBIT_GATES = {"h": 0, "x": 0, "y": 0, "z": 0, "s": 0, "t": 0, "rx": 1, "ry": 1, "rz": 1, "u3": 3}
TWO_QUBIT_GATES = ("cnot", "cz")

_SQ2 = 1 / math.sqrt(2)
_FIXED = {
    "h": np.array([[_SQ2, _SQ2], [_SQ2, -_SQ2]], dtype=complex),
    "x": np.array([[0, 1], [1, 0]], dtype=complex),
    "y": np.array([[0, -1j], [1j, 0]], dtype=complex),
    "z": np.array([[1, 0], [0, -1]], dtype=complex),
    "s": np.array([[1, 0], [0, 1j]], dtype=complex),
    "t": np.array([[1, 0], [0, np.exp(1j * math.pi / 4)]], dtype=complex),
}


def gate_matrix(gate: str, params: tuple[float, ...] = ()) -> np.ndarray:
    """Unitary of a one-qubit gate, in ``|0>, |1>`` order."""
    if gate in _FIXED:
        return _FIXED[gate].copy()
    if gate == "rx":
        (t,) = params
        c, s = math.cos(t / 2), math.sin(t / 2)
        return np.array([[c, -1j * s], [-1j * s, c]], dtype=complex)
    if gate == "ry":
        (t,) = params
        c, s = math.cos(t / 2), math.sin(t / 2)
        return np.array([[c, -s], [s, c]], dtype=complex)
    if gate == "rz":
        (t,) = params
        return np.diag([np.exp(-0.5j * t), np.exp(0.5j * t)])
    if gate == "u3":
        theta, phi, lam = params
        c, s = math.cos(theta / 2), math.sin(theta / 2)
        return np.array(
            [[c, -np.exp(1j * lam) * s], [np.exp(1j * phi) * s, np.exp(1j * (phi + lam)) * c]],
            dtype=complex,
        )
    raise ValueError(f"unknown one-qubit gate {gate!r}")


@dataclass(frozen=True)
class OneQ:
    gate: str
    target: int
    params: tuple[float, ...] = ()

    def matrix(self) -> np.ndarray:
        return gate_matrix(self.gate, self.params)


@dataclass(frozen=True)
class TwoQ:
    gate: str
    control: int
    target: int


@dataclass(frozen=True)
class Measure:
    target: int


@dataclass(frozen=True)
class Load:
    """Prepare a fresh ``|0>`` qubit by rotating the donor and swapping it in."""

    target: int
    gate: str | None = None
    params: tuple[float, ...] = ()

    def matrix(self) -> np.ndarray:
        return np.eye(2, dtype=complex) if self.gate is None else gate_matrix(self.gate, self.params)


Op = Union[OneQ, TwoQ, Measure, Load]


@dataclass(frozen=True)
class CircuitIR:
    num_qubits: int
    ops: tuple[Op, ...] = field(default_factory=tuple)

    def __post_init__(self) -> None:
        object.__setattr__(self, "ops", tuple(self.ops))
        if not isinstance(self.num_qubits, int) or self.num_qubits < 1:
            raise ValueError(f"num_qubits must be >= 1, got {self.num_qubits!r}")
        for op in self.ops:
            problem = _op_problem(op, self.num_qubits)
            if problem:
                raise ValueError(problem)

    def without_measurements(self) -> "CircuitIR":
        return CircuitIR(self.num_qubits, tuple(op for op in self.ops if not isinstance(op, Measure)))

    @property
    def measurement_count(self) -> int:
        return sum(isinstance(op, Measure) for op in self.ops)


def _op_problem(op, n: int) -> str | None:
    if isinstance(op, (OneQ, Load)):
        if isinstance(op, OneQ) or op.gate is not None:
            if op.gate not in ONE_QUBIT_GATES:
                return f"unknown gate {op.gate!r}"
            if len(op.params) != ONE_QUBIT_GATES[op.gate]:
                return f"{op.gate} takes {ONE_QUBIT_GATES[op.gate]} parameter(s), got {len(op.params)}"
        elif op.params:
            return "load without a gate takes no parameters"
        if not all(math.isfinite(p) for p in op.params):
            return "parameters must be finite"
        qubits = (op.target,)
    elif isinstance(op, TwoQ):
        if op.gate not in TWO_QUBIT_GATES:
            return f"unknown gate {op.gate!r}"
        if op.control == op.target:
            return "control equals target"
        qubits = (op.control, op.target)
    elif isinstance(op, Measure):
        qubits = (op.target,)
    else:
        return f"not a circuit op: {op!r}"
    for q in qubits:
        if not isinstance(q, int) or not 0 <= q < n:
            return f"qubit {q} out of range for {n} qubits"
    return None


@dataclass(frozen=True)
class Diagnostic:
    line: int
    message: str
    severity: str = "error"

    def to_dict(self) -> dict:
        return {"line": self.line, "severity": self.severity, "message": self.message}

    def __str__(self) -> str:
        return f"line {self.line}: {self.severity}: {self.message}"


class CircuitParseError(ValueError):
    def __init__(self, diagnostics: list[Diagnostic]):
        self.diagnostics = diagnostics
        super().__init__("\n".join(str(d) for d in diagnostics))


def _int(tok: str) -> int:
    if not (tok.isascii() and tok.isdigit()):
        raise ValueError(f"expected a qubit index, got {tok!r}")
    return int(tok)


def _float(tok: str) -> float:
    try:
        v = float(tok)
    except ValueError:
        raise ValueError(f"expected a number, got {tok!r}") from None
    if not math.isfinite(v):
        raise ValueError(f"parameter must be finite, got {tok!r}")
    return v


def _parse_one_q(gate: str, args: list[str]) -> tuple[int, tuple[float, ...]]:
    arity = ONE_QUBIT_GATES[gate]
    if len(args) != 1 + arity:
        raise ValueError(f"{gate} expects 1 qubit and {arity} parameter(s), got {len(args)} argument(s)")
    return _int(args[0]), tuple(_float(a) for a in args[1:])


def _parse_op(name: str, args: list[str]) -> Op:
    if name in ONE_QUBIT_GATES:
        q, params = _parse_one_q(name, args)
        return OneQ(name, q, params)
    if name in TWO_QUBIT_GATES:
        if len(args) != 2:
            raise ValueError(f"{name} expects 2 qubits, got {len(args)} argument(s)")
        return TwoQ(name, _int(args[0]), _int(args[1]))
    if name == "measure":
        if len(args) != 1:
            raise ValueError(f"measure expects 1 qubit, got {len(args)} argument(s)")
        return Measure(_int(args[0]))
    if name == "load":
        if not args:
            raise ValueError("load expects a qubit")
        q = _int(args[0])
        if len(args) == 1:
            return Load(q)
        gate = args[1]
        if gate not in ONE_QUBIT_GATES:
            raise ValueError(f"unknown gate {gate!r} in load")
        _, params = _parse_one_q(gate, [args[0], *args[2:]])
        return Load(q, gate, params)
    raise ValueError(f"unknown gate {name!r}")


def parse(text: str) -> CircuitIR:
    """Parse ``.qct`` text; all problems are collected before raising."""
    diagnostics: list[Diagnostic] = []
    num_qubits: int | None = None
    header_seen = False
    ops: list[Op] = []
    last_line = 0
    for lineno, raw in enumerate(text.splitlines(), start=1):
        last_line = lineno
        tokens = raw.split("#", 1)[0].split()
        if not tokens:
            continue
        name, args = tokens[0], tokens[1:]
        if not header_seen:
            header_seen = True
            if name == "qubits":
                if len(args) == 1 and args[0].isdigit() and int(args[0]) >= 1:
                    num_qubits = int(args[0])
                else:
                    diagnostics.append(Diagnostic(lineno, "header must be 'qubits N' with N >= 1"))
                continue
            diagnostics.append(Diagnostic(lineno, "missing 'qubits N' header"))
        elif name == "qubits":
            diagnostics.append(Diagnostic(lineno, "duplicate 'qubits' header"))
            continue
        try:
            op = _parse_op(name, args)
        except ValueError as exc:
            diagnostics.append(Diagnostic(lineno, str(exc)))
            continue
        if num_qubits is not None:
            problem = _op_problem(op, num_qubits)
            if problem:
                diagnostics.append(Diagnostic(lineno, problem))
                continue
        elif isinstance(op, TwoQ) and op.control == op.target:
            diagnostics.append(Diagnostic(lineno, "control equals target"))
            continue
        ops.append(op)
    if not header_seen:
        diagnostics.append(Diagnostic(max(last_line, 1), "missing 'qubits N' header"))
    if diagnostics:
        raise CircuitParseError(diagnostics)
    return CircuitIR(num_qubits, tuple(ops))


def _fmt(x: float) -> str:
    return format(x, ".17g")


def emit(ir: CircuitIR) -> str:
    lines = [f"qubits {ir.num_qubits}"]
    for op in ir.ops:
        if isinstance(op, OneQ):
            lines.append(" ".join([op.gate, str(op.target), *map(_fmt, op.params)]))
        elif isinstance(op, TwoQ):
            lines.append(f"{op.gate} {op.control} {op.target}")
        elif isinstance(op, Measure):
            lines.append(f"measure {op.target}")
        elif isinstance(op, Load):
            parts = ["load", str(op.target)]
            if op.gate is not None:
                parts += [op.gate, *map(_fmt, op.params)]
            lines.append(" ".join(parts))
    return "\n".join(lines) + "\n"
