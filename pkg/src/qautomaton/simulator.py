"""Ideal-unitary state-vector execution of programs, plus the circuit oracle.

Physical basis index bit 0 is the donor D; bit ``1 + s`` is lattice site ``s``
in lexicographic order. Logical states put qubit 0 on bit 0.

Both execution paths draw exactly one uniform variate per measurement, in
program order, and report outcome 1 when the draw falls below the Born
probability of 1. A compiled program and its circuit therefore agree record
for record under a shared seed.
"""
from __future__ import annotations

import os
from collections import Counter
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .circuit import CircuitIR, Load, Measure, OneQ, TwoQ
from .compiler import PlacementPolicy, compile_circuit
from .isa import (
    CondDA,
    GlobalSwap,
    Local1Q,
    MeasureD,
    Program,
    SwapDA,
    stage_bit_pairs,
)
from .lattice import DONOR, LatticeSpec, bit_site, cell_site, site_bit, total_spins

DEFAULT_MAX_SPINS = 24
MAX_SPINS_ENV = "QAUTOMATON_MAX_SPINS"
PURITY_TOL = 1e-12


class SimulationSizeError(ValueError):
    pass


class ConduitPurityError(RuntimeError):
    """Probability leaked onto a conduit site or the donor."""

    def __init__(self, site, mass: float):
        self.site = site
        self.mass = mass
        super().__init__(f"conduit purity violated: site {site} carries excitation mass {mass:.3e}")


def max_spins() -> int:
    value = os.environ.get(MAX_SPINS_ENV)
    return int(value) if value else DEFAULT_MAX_SPINS


# --- kernels ------------------------------------------------------------------

def _apply_1q(state: np.ndarray, u: np.ndarray, bit: int) -> np.ndarray:
    s = state.reshape(-1, 2, 1 << bit)
    lo, hi = s[:, 0, :].copy(), s[:, 1, :].copy()
    s[:, 0, :] = u[0, 0] * lo + u[0, 1] * hi
    s[:, 1, :] = u[1, 0] * lo + u[1, 1] * hi
    return state


def _apply_permutation(state: np.ndarray, nbits: int, swaps: list[tuple[int, int]]) -> np.ndarray:
    # bit b lives on tensor axis nbits - 1 - b
    axes = list(range(nbits))
    for p, q in swaps:
        ap, aq = nbits - 1 - p, nbits - 1 - q
        axes[ap], axes[aq] = axes[aq], axes[ap]
    return np.ascontiguousarray(state.reshape((2,) * nbits).transpose(axes)).reshape(-1)


def _apply_da(state: np.ndarray, kind: str) -> np.ndarray:
    # axis 1 is the A0 bit (bit 1), axis 2 is D (bit 0)
    s = state.reshape(-1, 2, 2)
    if kind == "swap":
        s[:, [0, 1], [1, 0]] = s[:, [1, 0], [0, 1]]
    elif kind == "cnot_d_controls_a":
        s[:, [0, 1], 1] = s[:, [1, 0], 1]
    elif kind == "cnot_a_controls_d":
        s[:, 1, [0, 1]] = s[:, 1, [1, 0]]
    elif kind == "cz":
        s[:, 1, 1] *= -1
    else:
        raise ValueError(f"unknown conditional kind {kind!r}")
    return state


def _measure_bit(state: np.ndarray, bit: int, rng: np.random.Generator) -> tuple[np.ndarray, int]:
    s = state.reshape(-1, 2, 1 << bit)
    p1 = float(np.sum(np.abs(s[:, 1, :]) ** 2))
    outcome = int(rng.random() < p1)
    s[:, 1 - outcome, :] = 0
    state /= np.sqrt(p1 if outcome else 1.0 - p1)
    return state, outcome


# --- physical execution -------------------------------------------------------

@dataclass
class RunResult:
    records: list[int]
    rng_seed: int
    final_state: np.ndarray | None = None

    def to_dict(self, include_state: bool = True) -> dict:
        out = {"rng_seed": self.rng_seed, "records": list(self.records)}
        if include_state and self.final_state is not None:
            out["final_state"] = [[float(a.real), float(a.imag)] for a in self.final_state]
        return out

    @classmethod
    def from_dict(cls, data: dict) -> "RunResult":
        state = data.get("final_state")
        if state is not None:
            state = np.array([complex(re, im) for re, im in state])
        return cls(list(data["records"]), int(data["rng_seed"]), state)


def dump_amplitudes(state: np.ndarray, path) -> None:
    """Little-endian (real, imag) float64 pairs in basis-index order."""
    np.asarray(state, dtype="<c16").tofile(path)


def load_amplitudes(path) -> np.ndarray:
    return np.fromfile(path, dtype="<c16").astype(complex)


def zero_state(nbits: int) -> np.ndarray:
    state = np.zeros(1 << nbits, dtype=complex)
    state[0] = 1.0
    return state


class Machine:
    """Executes a validated program instruction by instruction."""

    def __init__(self, program: Program, max_spins_: int | None = None):
        program.validate()
        self.program = program
        self.spec = program.spec
        self.nbits = total_spins(self.spec)
        cap = max_spins() if max_spins_ is None else max_spins_
        if self.nbits > cap:
            raise SimulationSizeError(f"program needs {self.nbits} spins, simulator cap is {cap}")
        if site_bit(self.spec, cell_site((0, 0, 0))) != 1:
            raise AssertionError("home A site must be bit 1")
        self._stage_cache: dict[tuple[str, str], list[tuple[int, int]]] = {}

    def stage(self, ins: GlobalSwap) -> list[tuple[int, int]]:
        key = (ins.axis, ins.pair)
        if key not in self._stage_cache:
            self._stage_cache[key] = stage_bit_pairs(self.spec, ins.axis, ins.pair)
        return self._stage_cache[key]

    def step(self, state: np.ndarray, ins, rng: np.random.Generator, records: list[int]) -> np.ndarray:
        if isinstance(ins, GlobalSwap):
            return _apply_permutation(state, self.nbits, self.stage(ins))
        if isinstance(ins, SwapDA):
            return _apply_da(state, "swap")
        if isinstance(ins, CondDA):
            return _apply_da(state, ins.kind)
        if isinstance(ins, Local1Q):
            return _apply_1q(state, ins.matrix(), 0 if ins.target == "D" else 1)
        if isinstance(ins, MeasureD):
            state, outcome = _measure_bit(state, 0, rng)
            records[ins.record] = outcome
            return state
        raise ValueError(f"not an instruction: {ins!r}")


def run(
    program: Program,
    seed: int = 0,
    *,
    initial_state: np.ndarray | None = None,
    on_boundary: Callable[[int, np.ndarray], None] | None = None,
    keep_state: bool = True,
    max_spins_: int | None = None,
) -> RunResult:
    """Execute ``program`` from the all-zero state (or ``initial_state``).

    ``on_boundary(index, state)`` is called after each lowered op listed in
    ``program.op_boundaries``.
    """
    machine = Machine(program, max_spins_)
    rng = np.random.default_rng(seed)
    state = zero_state(machine.nbits) if initial_state is None else np.array(initial_state, dtype=complex)
    records = [0] * program.measurement_count
    boundaries = set(program.op_boundaries)
    for i, ins in enumerate(program.instructions):
        state = machine.step(state, ins, rng, records)
        if on_boundary is not None and i + 1 in boundaries:
            on_boundary(i + 1, state)
    return RunResult(records, seed, state if keep_state else None)


def excitation_masses(state: np.ndarray, program: Program) -> dict:
    """Probability of each non-storage spin (conduits and D) being in ``|1>``."""
    spec = program.spec
    nbits = total_spins(spec)
    storage = {site_bit(spec, cell_site(c)) for c in program.qubit_map.values()}
    probs = np.abs(state) ** 2
    idx = np.arange(len(state))
    out = {}
    for b in range(nbits):
        if b not in storage:
            out[bit_site(spec, b)] = float(probs[(idx >> b) & 1 == 1].sum())
    return out


def conduit_mass(state: np.ndarray, program: Program) -> float:
    """Total probability on configurations with any conduit site or D excited."""
    spec = program.spec
    mask = (1 << total_spins(spec)) - 1
    for c in program.qubit_map.values():
        mask &= ~(1 << site_bit(spec, cell_site(c)))
    idx = np.arange(len(state))
    return float((np.abs(state[(idx & mask) != 0]) ** 2).sum())


def extract_logical(state: np.ndarray, program: Program, tol: float = PURITY_TOL) -> np.ndarray:
    mass = conduit_mass(state, program)
    if mass > tol:
        site, worst = max(excitation_masses(state, program).items(), key=lambda kv: kv[1])
        raise ConduitPurityError(site, worst)
    n = len(program.qubit_map)
    bits = [site_bit(program.spec, cell_site(program.qubit_map[q])) for q in range(n)]
    logical = np.arange(1 << n)
    physical = np.zeros_like(logical)
    for q, b in enumerate(bits):
        physical |= ((logical >> q) & 1) << b
    return state[physical].copy()


def fidelity(a: np.ndarray, b: np.ndarray) -> float:
    a, b = np.asarray(a), np.asarray(b)
    if a.shape != b.shape:
        raise ValueError(f"dimension mismatch: {a.shape} vs {b.shape}")
    return float(min(1.0, abs(np.vdot(a, b)) ** 2))


# --- oracle ---------------------------------------------------------------------

def _oracle_apply(psi: np.ndarray, u: np.ndarray, qubits: tuple[int, ...], n: int) -> np.ndarray:
    # psi is an n-axis tensor; axis n - 1 - q is qubit q
    k = len(qubits)
    axes = [n - 1 - q for q in qubits]
    gate = u.reshape((2,) * (2 * k))
    out = np.tensordot(gate, psi, axes=(list(range(k, 2 * k)), axes))
    return np.moveaxis(out, list(range(k)), axes)


_CNOT = np.array([[1, 0, 0, 0], [0, 1, 0, 0], [0, 0, 0, 1], [0, 0, 1, 0]], dtype=complex)
_CZ = np.diag([1, 1, 1, -1]).astype(complex)


@dataclass
class OracleResult:
    state: np.ndarray
    records: list[int]
    rng_seed: int


def oracle_run(ir: CircuitIR, seed: int = 0, *, max_qubits: int | None = None) -> OracleResult:
    """Direct simulation of the circuit on ``ir.num_qubits`` qubits."""
    n = ir.num_qubits
    cap = max_spins() if max_qubits is None else max_qubits
    if n > cap:
        raise SimulationSizeError(f"circuit has {n} qubits, oracle cap is {cap}")
    rng = np.random.default_rng(seed)
    psi = np.zeros((2,) * n, dtype=complex)
    psi[(0,) * n] = 1.0
    records = []
    for op in ir.ops:
        if isinstance(op, (OneQ, Load)):
            psi = _oracle_apply(psi, op.matrix(), (op.target,), n)
        elif isinstance(op, TwoQ):
            u = _CNOT if op.gate == "cnot" else _CZ
            # 4x4 in (control, target) order: first tensor factor is the control
            psi = _oracle_apply(psi, u, (op.control, op.target), n)
        elif isinstance(op, Measure):
            axis = n - 1 - op.target
            p1 = float(np.sum(np.abs(np.take(psi, 1, axis=axis)) ** 2))
            outcome = int(rng.random() < p1)
            index = [slice(None)] * n
            index[axis] = 1 - outcome
            psi[tuple(index)] = 0
            psi = psi / np.sqrt(p1 if outcome else 1.0 - p1)
            records.append(outcome)
    return OracleResult(psi.reshape(-1), records, seed)


# --- verification -------------------------------------------------------------

@dataclass
class VerifyReport:
    min_fidelity: float
    fidelities: list[float]
    shots: int = 0
    record_agreement: float | None = None
    total_variation: float | None = None
    compiled_counts: dict[str, int] = field(default_factory=dict)
    oracle_counts: dict[str, int] = field(default_factory=dict)

    def to_dict(self) -> dict:
        return {
            "min_fidelity": self.min_fidelity,
            "fidelities": self.fidelities,
            "shots": self.shots,
            "record_agreement": self.record_agreement,
            "total_variation": self.total_variation,
            "compiled_counts": self.compiled_counts,
            "oracle_counts": self.oracle_counts,
        }


def _random_loads(n: int, rng: np.random.Generator) -> tuple[Load, ...]:
    return tuple(Load(q, "u3", tuple(float(v) for v in rng.uniform(0, 2 * np.pi, 3))) for q in range(n))


def verify(
    ir: CircuitIR,
    spec: LatticeSpec,
    policy: PlacementPolicy | None = None,
    trials: int = 1,
    seed: int = 0,
    *,
    shots: int = 200,
    **compile_options,
) -> VerifyReport:
    """Compare compiled execution against the oracle.

    Trial 0 runs the measurement-free circuit from ``|0...0>``; later trials
    first load a random product state through the donor port. When the
    circuit measures, ``shots`` seeded shots of both paths are compared too.
    """
    body = ir.without_measurements()
    fids = []
    for t in range(trials):
        prefix = () if t == 0 else _random_loads(ir.num_qubits, np.random.default_rng([seed, t]))
        trial_ir = CircuitIR(ir.num_qubits, prefix + body.ops)
        program = compile_circuit(trial_ir, spec, policy, **compile_options)
        got = extract_logical(run(program, seed).final_state, program)
        fids.append(fidelity(got, oracle_run(trial_ir, seed).state))
    report = VerifyReport(min(fids) if fids else 1.0, fids)
    if ir.measurement_count and shots > 0:
        program = compile_circuit(ir, spec, policy, **compile_options)
        compiled: Counter[str] = Counter()
        oracle: Counter[str] = Counter()
        agree = 0
        for k in range(shots):
            a = run(program, seed + k, keep_state=False).records
            b = oracle_run(ir, seed + k).records
            compiled["".join(map(str, a))] += 1
            oracle["".join(map(str, b))] += 1
            agree += a == b
        keys = set(compiled) | set(oracle)
        report.shots = shots
        report.record_agreement = agree / shots
        report.total_variation = 0.5 * sum(abs(compiled[k] - oracle[k]) for k in keys) / shots
        report.compiled_counts = dict(sorted(compiled.items()))
        report.oracle_counts = dict(sorted(oracle.items()))
    return report
