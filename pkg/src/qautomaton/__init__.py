"""Compiler and ideal simulator for doped-crystal NMR quantum automata."""
from .circuit import CircuitIR, CircuitParseError, Load, Measure, OneQ, TwoQ, emit, parse
from .compiler import CapacityError, CompileError, LoadOrderWarning, PlacementPolicy, compile_circuit
from .isa import CostReport, Program, ProgramError, cost, macro_shift, pulse_events
from .lattice import Frame, LatticeError, LatticeSpec, logical_capacity, route_steps, total_spins
from .simulator import extract_logical, fidelity, oracle_run, run, verify
from .thermal import ensemble_yield, perfect_init_prob, spin_ground_prob

__version__ = "0.1.0"
