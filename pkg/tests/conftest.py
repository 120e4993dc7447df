from __future__ import annotations

from pathlib import Path

import numpy as np
import pytest

from qautomaton.circuit import CircuitIR, OneQ, TwoQ
from qautomaton.lattice import LatticeSpec

DATA = Path(__file__).parent / "data"

ACCEPT_GATES = ("h", "x", "z", "s", "rx", "ry", "rz", "cnot", "cz")


def random_circuit(rng: np.random.Generator, n: int = 3, max_ops: int = 12, gates=ACCEPT_GATES) -> CircuitIR:
    ops = []
    for _ in range(int(rng.integers(1, max_ops + 1))):
        g = gates[int(rng.integers(len(gates)))]
        if g in ("cnot", "cz"):
            c, t = (int(v) for v in rng.choice(n, 2, replace=False))
            ops.append(TwoQ(g, c, t))
        elif g in ("rx", "ry", "rz"):
            ops.append(OneQ(g, int(rng.integers(n)), (float(rng.uniform(-np.pi, np.pi)),)))
        elif g == "u3":
            ops.append(OneQ(g, int(rng.integers(n)), tuple(float(v) for v in rng.uniform(-np.pi, np.pi, 3))))
        else:
            ops.append(OneQ(g, int(rng.integers(n))))
    return CircuitIR(n, tuple(ops))


def random_unitary(rng: np.random.Generator, dim: int = 2) -> np.ndarray:
    z = (rng.normal(size=(dim, dim)) + 1j * rng.normal(size=(dim, dim))) / np.sqrt(2)
    q, r = np.linalg.qr(z)
    return q * (np.diag(r) / np.abs(np.diag(r)))


@pytest.fixture
def line4() -> LatticeSpec:
    return LatticeSpec((4, 1, 1))


def pytest_terminal_summary(terminalreporter):
    mod = __import__("sys").modules.get("test_acceptance")
    if mod is None or not mod.RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for key in sorted(mod.RESULTS):
        ok, line = mod.RESULTS[key]
        terminalreporter.write_line(f"{'PASS' if ok else 'FAIL'} {key} {line}")
