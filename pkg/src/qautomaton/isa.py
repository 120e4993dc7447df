"""Pulse-level instruction set, programs and the pulse-cost model."""
from __future__ import annotations

import cmath
import json
import math
from collections import Counter
from dataclasses import dataclass, field
from typing import Iterable, Union

import numpy as np

from .lattice import (
    AXES,
    DONOR,
    HOME_CELL,
    PAIRS,
    Cell,
    LatticeError,
    LatticeSpec,
    axis_index,
    cell_site,
    detuned_sites,
    site_bit,
    stage_pairs,
    total_spins,
    validate_cell,
)

LOCAL_TARGETS = ("A0", "D")
COND_KINDS = ("cnot_d_controls_a", "cnot_a_controls_d", "cz")
CNOTS_PER_SWAP = 3


class ProgramError(ValueError):
    """Malformed program; ``index`` names the offending instruction when known."""

    def __init__(self, message: str, index: int | None = None):
        self.index = index
        super().__init__(message if index is None else f"instruction {index}: {message}")


@dataclass(frozen=True)
class GlobalSwap:
    axis: str
    pair: str

    def to_dict(self) -> dict:
        return {"op": "global_swap", "axis": self.axis, "pair": self.pair}


@dataclass(frozen=True)
class Local1Q:
    """Single-qubit rotation ``e^{i phase} Rz(a) Ry(b) Rz(g)`` on A0 or D."""

    target: str
    euler: tuple[float, float, float]
    phase: float = 0.0

    def matrix(self) -> np.ndarray:
        return euler_to_matrix(*self.euler, self.phase)

    def to_dict(self) -> dict:
        return {"op": "local_1q", "target": self.target, "euler": list(self.euler), "phase": self.phase}


@dataclass(frozen=True)
class CondDA:
    kind: str

    def to_dict(self) -> dict:
        return {"op": "cond_da", "kind": self.kind}


@dataclass(frozen=True)
class SwapDA:
    def to_dict(self) -> dict:
        return {"op": "swap_da"}


@dataclass(frozen=True)
class MeasureD:
    record: int

    def to_dict(self) -> dict:
        return {"op": "measure_d", "record": self.record}


Instruction = Union[GlobalSwap, Local1Q, CondDA, SwapDA, MeasureD]


def instruction_from_dict(data: dict) -> Instruction:
    op = data.get("op")
    try:
        if op == "global_swap":
            return GlobalSwap(data["axis"], data["pair"])
        if op == "local_1q":
            a, b, g = (float(v) for v in data["euler"])
            return Local1Q(data["target"], (a, b, g), float(data.get("phase", 0.0)))
        if op == "cond_da":
            return CondDA(data["kind"])
        if op == "swap_da":
            return SwapDA()
        if op == "measure_d":
            return MeasureD(int(data["record"]))
    except (KeyError, TypeError, ValueError) as exc:
        raise ProgramError(f"bad {op} instruction: {exc}") from None
    raise ProgramError(f"unknown op {op!r}")


# --- single-qubit rotations -------------------------------------------------

def euler_to_matrix(alpha: float, beta: float, gamma: float, phase: float = 0.0) -> np.ndarray:
    """``e^{i phase} Rz(alpha) Ry(beta) Rz(gamma)``."""
    c, s = math.cos(beta / 2), math.sin(beta / 2)
    em = cmath.exp(-0.5j * (alpha + gamma))
    ed = cmath.exp(0.5j * (alpha - gamma))
    g = cmath.exp(1j * phase)
    return g * np.array([[em * c, -ed.conjugate() * s], [ed * s, em.conjugate() * c]], dtype=complex)


def matrix_to_euler(u: np.ndarray) -> tuple[tuple[float, float, float], float]:
    """Z-Y-Z angles and global phase reproducing a 2x2 unitary."""
    u = np.asarray(u, dtype=complex)
    phase = cmath.phase(np.linalg.det(u)) / 2
    v = u * cmath.exp(-1j * phase)
    # v = [[a, -conj(b)], [b, conj(a)]]
    a, b = v[0, 0], v[1, 0]
    beta = 2 * math.atan2(abs(b), abs(a))
    if abs(b) < 1e-14:
        alpha, gamma = -2 * cmath.phase(a), 0.0
    elif abs(a) < 1e-14:
        alpha, gamma = 2 * cmath.phase(b), 0.0
    else:
        plus, minus = -2 * cmath.phase(a), 2 * cmath.phase(b)
        alpha, gamma = (plus + minus) / 2, (plus - minus) / 2
    # the SU(2) lift is only fixed up to sign; absorb a residual -1 into the phase
    if np.vdot(euler_to_matrix(alpha, beta, gamma, phase).ravel(), u.ravel()).real < 0:
        phase += math.pi
    return (alpha, beta, gamma), phase


# --- program ----------------------------------------------------------------

@dataclass(frozen=True)
class Program:
    spec: LatticeSpec
    instructions: tuple[Instruction, ...] = ()
    qubit_map: dict[int, Cell] = field(default_factory=dict)
    measurement_count: int = 0
    # Instruction indices at which each lowered circuit op ends.
    op_boundaries: tuple[int, ...] = ()

    def __post_init__(self) -> None:
        object.__setattr__(self, "instructions", tuple(self.instructions))
        object.__setattr__(self, "op_boundaries", tuple(self.op_boundaries))

    def validate(self) -> None:
        spec = self.spec
        seen = {}
        for q, cell in self.qubit_map.items():
            try:
                cell = validate_cell(spec, cell)
            except LatticeError as exc:
                raise ProgramError(f"qubit {q}: {exc}") from None
            if cell == HOME_CELL:
                raise ProgramError(f"qubit {q} mapped to the reserved home cell")
            if cell in seen:
                raise ProgramError(f"qubits {seen[cell]} and {q} share cell {cell}")
            seen[cell] = q
        records = set()
        for i, ins in enumerate(self.instructions):
            _validate_instruction(ins, spec, i)
            if isinstance(ins, MeasureD):
                if not 0 <= ins.record < self.measurement_count or ins.record in records:
                    raise ProgramError(f"record index {ins.record} invalid or reused", i)
                records.add(ins.record)
        if len(records) != self.measurement_count:
            raise ProgramError(f"measurement_count {self.measurement_count} but {len(records)} records")
        if any(not 0 <= b <= len(self.instructions) for b in self.op_boundaries):
            raise ProgramError("op boundary outside instruction range")

    def to_dict(self) -> dict:
        return {
            "spec": self.spec.to_dict(),
            "qubit_map": {str(q): list(c) for q, c in sorted(self.qubit_map.items())},
            "measurement_count": self.measurement_count,
            "op_boundaries": list(self.op_boundaries),
            "instructions": [ins.to_dict() for ins in self.instructions],
        }

    def to_json(self, indent: int | None = None) -> str:
        return json.dumps(self.to_dict(), indent=indent)

    @classmethod
    def from_dict(cls, data: dict) -> "Program":
        try:
            spec = LatticeSpec.from_dict(data["spec"])
            qmap = {int(q): tuple(c) for q, c in data.get("qubit_map", {}).items()}
            instructions = [instruction_from_dict(d) for d in data.get("instructions", [])]
            return cls(
                spec,
                tuple(instructions),
                qmap,
                int(data.get("measurement_count", 0)),
                tuple(data.get("op_boundaries", ())),
            )
        except (KeyError, TypeError, ValueError) as exc:
            if isinstance(exc, ProgramError):
                raise
            raise ProgramError(f"malformed program: {exc}") from None

    @classmethod
    def from_json(cls, text: str) -> "Program":
        return cls.from_dict(json.loads(text))


def _validate_instruction(ins, spec: LatticeSpec, index: int) -> None:
    if isinstance(ins, GlobalSwap):
        if ins.axis not in AXES or not spec.is_active(ins.axis):
            raise ProgramError(f"global swap on inactive axis {ins.axis!r}", index)
        if ins.pair not in PAIRS:
            raise ProgramError(f"unknown pair {ins.pair!r}", index)
    elif isinstance(ins, Local1Q):
        if ins.target not in LOCAL_TARGETS:
            raise ProgramError(f"unknown local target {ins.target!r}", index)
        if len(ins.euler) != 3 or not all(math.isfinite(v) for v in (*ins.euler, ins.phase)):
            raise ProgramError("non-finite rotation angles", index)
    elif isinstance(ins, CondDA):
        if ins.kind not in COND_KINDS:
            raise ProgramError(f"unknown conditional kind {ins.kind!r}", index)
    elif isinstance(ins, MeasureD):
        if not isinstance(ins.record, int):
            raise ProgramError("record index must be an integer", index)
    elif not isinstance(ins, SwapDA):
        raise ProgramError(f"not an instruction: {ins!r}", index)


# --- cellular shifting ------------------------------------------------------

def macro_shift(axis: str, direction: int, spec: LatticeSpec | None = None) -> list[GlobalSwap]:
    """Three stage swaps moving every A-site content one cell along ``axis``."""
    if axis not in AXES:
        raise LatticeError(f"unknown axis {axis!r}")
    if spec is not None and not spec.is_active(axis):
        raise LatticeError(f"cannot shift along degenerate axis {axis}")
    if direction == 1:
        return [GlobalSwap(axis, p) for p in PAIRS]
    if direction == -1:
        return [GlobalSwap(axis, p) for p in reversed(PAIRS)]
    raise LatticeError(f"direction must be +1 or -1, got {direction!r}")


def stage_bit_pairs(spec: LatticeSpec, axis: str, pair: str) -> list[tuple[int, int]]:
    return [(site_bit(spec, p), site_bit(spec, q)) for p, q in stage_pairs(spec, axis, pair)]


def site_permutation(instructions: Iterable[Instruction], spec: LatticeSpec) -> list[int]:
    """Where each bit's content ends up after the permutation instructions.

    ``perm[b]`` is the final bit holding what started on bit ``b``. Non-permuting
    instructions are ignored.
    """
    n = total_spins(spec)
    where = list(range(n))  # where[b]: current bit of content that started at b
    at = list(range(n))  # at[bit]: original bit of content now at bit
    home = site_bit(spec, cell_site(HOME_CELL))
    cache: dict[tuple[str, str], list[tuple[int, int]]] = {}
    for ins in instructions:
        if isinstance(ins, GlobalSwap):
            key = (ins.axis, ins.pair)
            if key not in cache:
                cache[key] = stage_bit_pairs(spec, ins.axis, ins.pair)
            swaps = cache[key]
        elif isinstance(ins, SwapDA):
            swaps = [(site_bit(spec, DONOR), home)]
        else:
            continue
        for p, q in swaps:
            cp, cq = at[p], at[q]
            at[p], at[q] = cq, cp
            where[cp], where[cq] = q, p
    return where


# --- cost model -------------------------------------------------------------

def pulse_set_count(spec: LatticeSpec) -> int:
    return spec.pulse_sets if detuned_sites(spec) else 1


def pulse_events(instr: Instruction, spec: LatticeSpec) -> int:
    if isinstance(instr, GlobalSwap):
        return CNOTS_PER_SWAP * pulse_set_count(spec)
    if isinstance(instr, SwapDA):
        return CNOTS_PER_SWAP
    if isinstance(instr, (Local1Q, CondDA)):
        return 1
    if isinstance(instr, MeasureD):
        return 0
    raise ProgramError(f"not an instruction: {instr!r}")


def _channels(instr: Instruction, spec: LatticeSpec) -> list[tuple[str, int]]:
    if isinstance(instr, GlobalSwap):
        sets = pulse_set_count(spec)
        names = ["standard"] + ["detuned" if i == 1 else f"detuned{i}" for i in range(1, sets)]
        return [(f"global:{instr.axis}:{instr.pair}:{name}", CNOTS_PER_SWAP) for name in names]
    if isinstance(instr, Local1Q):
        return [(f"local:{instr.target}", 1)]
    if isinstance(instr, CondDA):
        return [("cond_da", 1)]
    if isinstance(instr, SwapDA):
        return [("cond_da", CNOTS_PER_SWAP)]
    return []


@dataclass(frozen=True)
class CostReport:
    pulse_events_total: int = 0
    per_channel: dict[str, int] = field(default_factory=dict)
    macro_shift_count: int = 0
    cnot_equivalents: int = 0
    measurement_events: int = 0

    def to_dict(self) -> dict:
        out = {
            "pulse_events_total": self.pulse_events_total,
            "macro_shift_count": self.macro_shift_count,
            "cnot_equivalents": self.cnot_equivalents,
            "measurement_events": self.measurement_events,
        }
        out.update({f"channel[{k}]": v for k, v in sorted(self.per_channel.items())})
        return out

    @classmethod
    def from_dict(cls, data: dict) -> "CostReport":
        channels = {k[len("channel["):-1]: v for k, v in data.items() if k.startswith("channel[")}
        return cls(
            data["pulse_events_total"],
            channels,
            data["macro_shift_count"],
            data["cnot_equivalents"],
            data["measurement_events"],
        )


def cost(program: Program) -> CostReport:
    program.validate()
    spec = program.spec
    channels: Counter[str] = Counter()
    swaps = cnots = measures = 0
    for ins in program.instructions:
        for name, n in _channels(ins, spec):
            channels[name] += n
        if isinstance(ins, GlobalSwap):
            swaps += 1
            cnots += CNOTS_PER_SWAP
        elif isinstance(ins, SwapDA):
            cnots += CNOTS_PER_SWAP
        elif isinstance(ins, CondDA):
            cnots += 1
        elif isinstance(ins, MeasureD):
            measures += 1
    return CostReport(
        pulse_events_total=sum(channels.values()),
        per_channel=dict(channels),
        macro_shift_count=swaps // 3,
        cnot_equivalents=cnots,
        measurement_events=measures,
    )
