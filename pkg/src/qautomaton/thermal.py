"""Equilibrium initialization yield of an ensemble of automata.

Each spin is an independent two-level system with ground-state probability
``p = 1 / (1 + exp(-x))``, where ``x`` is the Zeeman splitting over ``k_B T``.
An automaton works only if all of its spins, donor included, start in ``|0>``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

from .lattice import LatticeSpec, total_spins


def _check_x(x: float) -> float:
    x = float(x)
    if not math.isfinite(x) or x < 0:
        raise ValueError(f"x must be finite and non-negative, got {x!r}")
    return x


def spin_ground_prob(x: float) -> float:
    return 1.0 / (1.0 + math.exp(-_check_x(x)))


def log_spin_ground_prob(x: float) -> float:
    return -math.log1p(math.exp(-_check_x(x)))


def perfect_init_prob(spec_or_spins: LatticeSpec | int, x: float) -> float:
    """Probability that every spin is in ``|0>``: ``p**Q`` evaluated in log space."""
    q = _spins(spec_or_spins)
    return math.exp(q * log_spin_ground_prob(x))


def _spins(spec_or_spins: LatticeSpec | int) -> int:
    q = total_spins(spec_or_spins) if isinstance(spec_or_spins, LatticeSpec) else int(spec_or_spins)
    if q < 1:
        raise ValueError(f"spin count must be positive, got {q}")
    return q


def threshold_x_closed_form(spec_or_spins: LatticeSpec | int) -> float:
    """``x`` at which the perfect-initialization probability is exactly 1/2."""
    q = _spins(spec_or_spins)
    log_p = -math.log(2) / q
    # ln(p / (1 - p)) with 1 - p = -expm1(log p) kept accurate for large q
    return log_p - math.log(-math.expm1(log_p))


def threshold_x(spec_or_spins: LatticeSpec | int, tol: float = 1e-12) -> float:
    """Bisection for ``perfect_init_prob(x) = 1/2``."""
    q = _spins(spec_or_spins)
    target = -math.log(2)

    def f(x: float) -> float:
        return q * log_spin_ground_prob(x) - target

    lo, hi = 0.0, 1.0
    while f(hi) < 0:
        hi *= 2
    if f(lo) >= 0:
        return lo
    while hi - lo > tol:
        mid = 0.5 * (lo + hi)
        if f(mid) < 0:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


@dataclass(frozen=True)
class EnsembleYield:
    num_automata: int
    total_spins: int
    perfect_init_prob: float
    expected_working: float
    threshold_x: float


def ensemble_yield(num_automata: int, spec_or_spins: LatticeSpec | int, x: float) -> EnsembleYield:
    if num_automata < 1:
        raise ValueError(f"num_automata must be >= 1, got {num_automata}")
    q = _spins(spec_or_spins)
    prob = perfect_init_prob(q, x)
    return EnsembleYield(num_automata, q, prob, num_automata * prob, threshold_x(q))


def thermal_table(spec_or_spins: LatticeSpec | int, xs) -> list[dict]:
    q = _spins(spec_or_spins)
    return [{"x": x, "p": spin_ground_prob(x), "perfect_init_prob": perfect_init_prob(q, x)} for x in xs]


def parse_grid(text: str) -> list[float]:
    """``start:stop:step`` (stop included when on the grid) or a comma list."""
    if ":" in text:
        parts = text.split(":")
        if len(parts) != 3:
            raise ValueError(f"grid must be start:stop:step, got {text!r}")
        start, stop, step = (float(v) for v in parts)
        if step <= 0 or stop < start:
            raise ValueError(f"grid needs step > 0 and stop >= start, got {text!r}")
        count = int(math.floor((stop - start) / step + 1e-9)) + 1
        return [start + i * step for i in range(count)]
    return [float(v) for v in text.split(",") if v.strip()]
