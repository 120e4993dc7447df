"""Lowering of logical circuits onto the automaton's instruction set.

Every logical op is lowered in isolation: bring the operand(s) to the home A
site by global cellular shifts, act there or through the donor, then shift
everything back. Between lowered ops the frame is the identity and the donor
holds ``|0>``.

Shift sequences are kept as words of ``(axis, signed count)`` runs. Restoring
positions always emits the exact inverse word, because stage permutations
along different axes do not commute on B/C sites, and a cyclic shortcut
(``N`` shifts along one axis) is the identity on A sites only.
"""
from __future__ import annotations

import warnings
from dataclasses import dataclass
from typing import Mapping

import numpy as np

from .circuit import CircuitIR, Load, Measure, OneQ, TwoQ
from .isa import CondDA, Instruction, Local1Q, MeasureD, Program, SwapDA, macro_shift, matrix_to_euler
from .lattice import (
    AXES,
    HOME_CELL,
    IDENTITY_FRAME,
    Cell,
    Frame,
    LatticeError,
    LatticeSpec,
    cells,
    logical_capacity,
    route_steps,
    shift_frame,
    validate_cell,
)

Word = list[tuple[str, int]]


class CompileError(ValueError):
    pass


class CapacityError(CompileError):
    pass


class LoadOrderWarning(UserWarning):
    """A load targets a qubit that may no longer be in ``|0>``."""


@dataclass(frozen=True)
class PlacementPolicy:
    """Row-major placement over non-home cells, or an explicit qubit -> cell map."""

    mapping: Mapping[int, Cell] | None = None

    def place(self, num_qubits: int, spec: LatticeSpec) -> dict[int, Cell]:
        if num_qubits > logical_capacity(spec):
            raise CapacityError(
                f"capacity exceeded: {num_qubits} qubits but lattice {spec.units} holds {logical_capacity(spec)}"
            )
        if self.mapping is None:
            free = [c for c in cells(spec) if c != HOME_CELL]
            return {q: free[q] for q in range(num_qubits)}
        placed: dict[int, Cell] = {}
        for q in range(num_qubits):
            if q not in self.mapping:
                raise CompileError(f"explicit placement has no cell for qubit {q}")
            try:
                cell = validate_cell(spec, self.mapping[q])
            except LatticeError as exc:
                raise CompileError(f"qubit {q}: {exc}") from None
            if cell == HOME_CELL:
                raise CompileError(f"qubit {q} placed on the reserved home cell")
            if cell in placed.values():
                raise CompileError(f"qubit {q} placed on occupied cell {cell}")
            placed[q] = cell
        return placed


# --- shift words ------------------------------------------------------------

def _reduce(word: Word) -> Word:
    out: Word = []
    for axis, n in word:
        if n == 0:
            continue
        if out and out[-1][0] == axis:
            merged = out[-1][1] + n
            out.pop()
            if merged:
                out.append((axis, merged))
        else:
            out.append((axis, n))
    return out


def _invert(word: Word) -> Word:
    return [(axis, -n) for axis, n in reversed(word)]


def _route_word(cell: Cell, frame: Frame, spec: LatticeSpec) -> Word:
    steps = route_steps(cell, frame, spec)
    return _reduce([(axis, s) for axis, s in zip(AXES, steps)])


def _emit(word: Word, frame: Frame, spec: LatticeSpec) -> tuple[list[Instruction], Frame]:
    out: list[Instruction] = []
    for axis, n in word:
        direction = 1 if n > 0 else -1
        for _ in range(abs(n)):
            out.extend(macro_shift(axis, direction, spec))
            frame = shift_frame(frame, axis, direction, spec)
    return out, frame


def word_length(word: Word) -> int:
    return sum(abs(n) for _, n in word)


def _require_identity(frame: Frame) -> None:
    if not frame.is_identity:
        raise CompileError(f"lowering expects the identity frame, got offset {frame.offset}")


def _local(target: str, unitary: np.ndarray) -> Local1Q:
    euler, phase = matrix_to_euler(unitary)
    return Local1Q(target, euler, phase)


# --- per-op lowerings ---------------------------------------------------------

def lower_1q(
    unitary: np.ndarray, cell: Cell, spec: LatticeSpec, frame: Frame = IDENTITY_FRAME
) -> tuple[list[Instruction], Frame]:
    """Route the qubit to A0, pulse it, route it back."""
    _require_identity(frame)
    there = _route_word(cell, frame, spec)
    out, frame = _emit(there, frame, spec)
    out.append(_local("A0", unitary))
    back, frame = _emit(_invert(there), frame, spec)
    return out + back, frame


def lower_2q(
    gate: str,
    x_cell: Cell,
    y_cell: Cell,
    spec: LatticeSpec,
    frame: Frame = IDENTITY_FRAME,
    *,
    x_is_control: bool = True,
) -> tuple[list[Instruction], Frame]:
    """Conditional gate between X (parked in D) and Y (brought to A0).

    For ``cnot`` the operand parked in D is the control when ``x_is_control``,
    otherwise the target.
    """
    _require_identity(frame)
    if x_cell == y_cell:
        raise CompileError("two-qubit gate operands share a cell")
    if gate == "cz":
        kind = "cz"
    elif gate == "cnot":
        kind = "cnot_d_controls_a" if x_is_control else "cnot_a_controls_d"
    else:
        raise CompileError(f"unknown two-qubit gate {gate!r}")

    route_x = _route_word(x_cell, frame, spec)
    out, frame = _emit(route_x, frame, spec)  # (a)
    out.append(SwapDA())  # (b)
    route_y = _route_word(y_cell, frame, spec)
    ins, frame = _emit(route_y, frame, spec)  # (c)
    out += ins
    out.append(CondDA(kind))  # (d)
    # (e): one combined route undoing (a)+(c); X's state now sits in D
    ins, frame = _emit(_invert(_reduce(route_x + route_y)), frame, spec)
    out += ins
    _require_identity(frame)
    route_x = _route_word(x_cell, frame, spec)
    ins, frame = _emit(route_x, frame, spec)  # (f)
    out += ins
    out.append(SwapDA())  # (g)
    ins, frame = _emit(_invert(route_x), frame, spec)  # (h)
    return out + ins, frame


def lower_load(
    prep: np.ndarray, cell: Cell, spec: LatticeSpec, frame: Frame = IDENTITY_FRAME, *, register_clean: bool = False
) -> tuple[list[Instruction], Frame]:
    """Rotate D, swap it into A0 and post the result to ``cell``.

    With ``register_clean`` every other storage cell is known to hold ``|0>``, so
    a one-way shift suffices. Otherwise the empty target cell is first routed to
    A0 so that occupied cells return to their own positions.
    """
    _require_identity(frame)
    there = _route_word(cell, frame, spec)
    out: list[Instruction] = []
    if not register_clean:
        out, frame = _emit(there, frame, spec)
    out += [_local("D", prep), SwapDA()]
    back, frame = _emit(_invert(there), frame, spec)
    if register_clean:
        frame = IDENTITY_FRAME  # every other cell is |0>, so the offset is unobservable
    return out + back, frame


def lower_measure(
    cell: Cell, record: int, spec: LatticeSpec, frame: Frame = IDENTITY_FRAME
) -> tuple[list[Instruction], Frame]:
    _require_identity(frame)
    there = _route_word(cell, frame, spec)
    out, frame = _emit(there, frame, spec)
    out += [SwapDA(), MeasureD(record), SwapDA()]
    back, frame = _emit(_invert(there), frame, spec)
    return out + back, frame


def _is_trivial(u: np.ndarray) -> bool:
    return abs(abs(np.trace(u)) - 2) < 1e-12


def compile_circuit(
    ir: CircuitIR,
    spec: LatticeSpec,
    policy: PlacementPolicy | None = None,
    *,
    elide_trivial: bool = False,
    cnot_in_d: str = "control",
) -> Program:
    """Lower ``ir`` to a program on ``spec``.

    ``cnot_in_d`` picks which cnot operand is parked in the donor
    (``"control"`` or ``"target"``). ``LoadOrderWarning`` is issued for loads
    onto qubits that have already been used.
    """
    if cnot_in_d not in ("control", "target"):
        raise CompileError(f"cnot_in_d must be 'control' or 'target', got {cnot_in_d!r}")
    qmap = (policy or PlacementPolicy()).place(ir.num_qubits, spec)
    instructions: list[Instruction] = []
    boundaries: list[int] = []
    touched: set[int] = set()
    records = 0
    frame = IDENTITY_FRAME
    for op in ir.ops:
        if isinstance(op, OneQ):
            u = op.matrix()
            if elide_trivial and _is_trivial(u):
                continue
            ins, frame = lower_1q(u, qmap[op.target], spec, frame)
            touched.add(op.target)
        elif isinstance(op, TwoQ):
            x, y = (op.control, op.target) if cnot_in_d == "control" or op.gate == "cz" else (op.target, op.control)
            ins, frame = lower_2q(op.gate, qmap[x], qmap[y], spec, frame, x_is_control=x == op.control)
            touched.update((x, y))
        elif isinstance(op, Measure):
            ins, frame = lower_measure(qmap[op.target], records, spec, frame)
            records += 1
            touched.add(op.target)
        elif isinstance(op, Load):
            if op.target in touched:
                warnings.warn(
                    f"load on qubit {op.target} after it was already used; its cell may not hold |0>",
                    LoadOrderWarning,
                    stacklevel=2,
                )
            ins, frame = lower_load(op.matrix(), qmap[op.target], spec, frame, register_clean=not touched)
            touched.add(op.target)
        else:
            raise CompileError(f"unsupported op {op!r}")
        instructions += ins
        boundaries.append(len(instructions))
    return Program(spec, tuple(instructions), qmap, records, tuple(boundaries))
