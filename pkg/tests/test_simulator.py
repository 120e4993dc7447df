from collections import Counter
from functools import reduce

import numpy as np
import pytest

from qautomaton.circuit import CircuitIR, Load, Measure, OneQ, TwoQ, gate_matrix, parse
from qautomaton.compiler import PlacementPolicy, compile_circuit
from qautomaton.isa import CondDA, GlobalSwap, Local1Q, MeasureD, Program, SwapDA, macro_shift, stage_bit_pairs
from qautomaton.lattice import LatticeSpec, site_bit, total_spins
from qautomaton.simulator import (
    MAX_SPINS_ENV,
    ConduitPurityError,
    SimulationSizeError,
    conduit_mass,
    dump_amplitudes,
    extract_logical,
    fidelity,
    load_amplitudes,
    oracle_run,
    run,
    verify,
)

from conftest import random_circuit, random_unitary

SQ2 = 1 / np.sqrt(2)
I2 = np.eye(2)


def random_state(rng, nbits):
    v = rng.normal(size=1 << nbits) + 1j * rng.normal(size=1 << nbits)
    return v / np.linalg.norm(v)


def full_1q(u, bit, nbits):
    # kron order: most significant bit first
    return reduce(np.kron, [u if b == bit else I2 for b in reversed(range(nbits))])


def perm_matrix(nbits, swaps):
    dim = 1 << nbits
    m = np.zeros((dim, dim))
    for i in range(dim):
        j = i
        for p, q in swaps:
            bp, bq = (i >> p) & 1, (i >> q) & 1
            j = (j & ~(1 << p) & ~(1 << q)) | (bq << p) | (bp << q)
        m[j, i] = 1
    return m


def controlled(nbits, control, target_op):
    """Brute-force matrix of a two-bit gate on bits 0 (D) and 1 (A0)."""
    dim = 1 << nbits
    m = np.zeros((dim, dim), dtype=complex)
    for i in range(dim):
        d, a = i & 1, (i >> 1) & 1
        for j_da, amp in target_op(d, a):
            jd, ja = j_da
            m[(i & ~3) | (ja << 1) | jd, i] += amp
    return m


SPEC2 = LatticeSpec((2, 1, 1))  # 7 spins


def single(ins, state, spec=SPEC2, seed=0):
    return run(Program(spec, (ins,)), seed, initial_state=state).final_state


def test_empty_program_zero_state(line4):
    res = run(Program(line4))
    assert res.records == []
    assert res.final_state[0] == 1 and np.count_nonzero(res.final_state) == 1


def test_load_one_through_donor(line4):
    x = Local1Q("D", *_euler(gate_matrix("rx", (np.pi,))))
    state = run(Program(line4, (x, SwapDA()))).final_state
    (idx,) = np.flatnonzero(np.abs(state) > 1e-12)
    assert idx == 1 << site_bit(line4, (0, 0, 0))
    assert abs(abs(state[idx]) - 1) < 1e-12


def _euler(u):
    from qautomaton.isa import matrix_to_euler

    return matrix_to_euler(u)


@pytest.mark.parametrize("target, bit", [("D", 0), ("A0", 1)])
def test_local1q_matches_kron(target, bit):
    rng = np.random.default_rng(1)
    u = random_unitary(rng)
    psi = random_state(rng, 7)
    got = single(Local1Q(target, *_euler(u)), psi.copy())
    assert np.allclose(got, full_1q(u, bit, 7) @ psi, atol=1e-12)


@pytest.mark.parametrize(
    "ins, op",
    [
        (SwapDA(), lambda d, a: [((a, d), 1)]),
        (CondDA("cnot_d_controls_a"), lambda d, a: [((d, a ^ d), 1)]),
        (CondDA("cnot_a_controls_d"), lambda d, a: [((d ^ a, a), 1)]),
        (CondDA("cz"), lambda d, a: [((d, a), -1 if d and a else 1)]),
    ],
)
def test_da_gates_match_brute_force(ins, op):
    psi = random_state(np.random.default_rng(2), 7)
    assert np.allclose(single(ins, psi.copy()), controlled(7, None, op) @ psi, atol=1e-14)


@pytest.mark.parametrize("pair", ["AB", "BC", "CA"])
def test_global_swap_matches_permutation_matrix(pair):
    psi = random_state(np.random.default_rng(3), 7)
    expected = perm_matrix(7, stage_bit_pairs(SPEC2, "x", pair)) @ psi
    got = single(GlobalSwap("x", pair), psi.copy())
    assert np.array_equal(got, expected)


def test_global_swap_is_exact_involution(line4):
    psi = random_state(np.random.default_rng(4), 13)
    for pair in ("AB", "BC", "CA"):
        out = run(Program(line4, (GlobalSwap("x", pair),) * 2), initial_state=psi).final_state
        assert np.array_equal(out, psi)


def test_macro_shift_identity_on_conduit_free_states(line4):
    # random amplitudes on A-site configurations only: N shifts act as the identity
    rng = np.random.default_rng(5)
    a_bits = [site_bit(line4, (3 * u, 0, 0)) for u in range(4)]
    psi = np.zeros(1 << 13, dtype=complex)
    for cfg in range(16):
        psi[sum(((cfg >> k) & 1) << b for k, b in enumerate(a_bits))] = rng.normal() + 1j * rng.normal()
    psi /= np.linalg.norm(psi)
    out = run(Program(line4, tuple(macro_shift("x", 1) * 4)), initial_state=psi).final_state
    assert np.array_equal(out, psi)


def test_oracle_bell():
    res = oracle_run(parse("qubits 2\nh 0\ncnot 0 1"))
    assert np.allclose(res.state, [SQ2, 0, 0, SQ2])


def test_oracle_x():
    assert np.allclose(oracle_run(parse("qubits 1\nx 0")).state, [0, 1])


def test_oracle_cnot_orientation():
    # control is qubit 1, target qubit 0: |q1 q0> = |10> -> |11>
    res = oracle_run(CircuitIR(2, (OneQ("x", 1), TwoQ("cnot", 1, 0))))
    assert np.allclose(res.state, [0, 0, 0, 1])
    res = oracle_run(CircuitIR(2, (OneQ("x", 0), TwoQ("cnot", 1, 0))))
    assert np.allclose(res.state, [0, 1, 0, 0])


def test_oracle_matches_dense_matrices():
    rng = np.random.default_rng(6)
    for _ in range(10):
        ir = random_circuit(rng, 3, 12, ("h", "x", "y", "z", "s", "t", "rx", "ry", "rz", "u3", "cnot", "cz"))
        psi = np.zeros(8, dtype=complex)
        psi[0] = 1
        for op in ir.ops:
            if isinstance(op, OneQ):
                psi = full_1q(op.matrix(), op.target, 3) @ psi
            else:
                m = np.zeros((8, 8), dtype=complex)
                for i in range(8):
                    c, t = (i >> op.control) & 1, (i >> op.target) & 1
                    if op.gate == "cnot":
                        m[i ^ (c << op.target), i] = 1
                    else:
                        m[i, i] = -1 if c and t else 1
                psi = m @ psi
        assert np.allclose(oracle_run(ir).state, psi, atol=1e-12)


def test_extract_zero_state(line4):
    p = compile_circuit(CircuitIR(3), line4)
    logical = extract_logical(run(p).final_state, p)
    assert np.allclose(logical, np.eye(8)[0])


def test_extract_after_h(line4):
    p = compile_circuit(parse("qubits 2\nh 0"), line4)
    logical = extract_logical(run(p).final_state, p)
    assert np.allclose(logical, [SQ2, SQ2, 0, 0])


def test_extract_detects_excited_conduit(line4):
    p = compile_circuit(CircuitIR(2), line4)
    state = np.zeros(1 << 13, dtype=complex)
    state[1 << site_bit(line4, (1, 0, 0))] = 1  # a B site
    with pytest.raises(ConduitPurityError) as exc:
        extract_logical(state, p)
    assert exc.value.site == (1, 0, 0)
    assert exc.value.mass == pytest.approx(1.0)


def test_fidelity_examples():
    a = np.array([0.6, 0.8j])
    assert fidelity(a, a) == pytest.approx(1.0)
    assert fidelity([1, 0], [0, 1]) == 0.0
    for theta in np.linspace(0, 2 * np.pi, 7):
        assert fidelity(np.exp(1j * theta) * a, a) == pytest.approx(1.0)
    with pytest.raises(ValueError):
        fidelity([1, 0], [1, 0, 0])


def test_bell_records_correlated(line4):
    p = compile_circuit(parse("qubits 2\nh 0\ncnot 0 1\nmeasure 0\nmeasure 1"), line4)
    counts = Counter(tuple(run(p, seed, keep_state=False).records) for seed in range(400))
    assert set(counts) <= {(0, 0), (1, 1)}
    assert 0.4 < counts[(0, 0)] / 400 < 0.6


def test_compiled_and_oracle_share_seed_schedule(line4):
    ir = parse("qubits 3\nh 0\nh 1\nry 2 1.1\nmeasure 0\nmeasure 1\nmeasure 2")
    p = compile_circuit(ir, line4)
    for seed in range(50):
        assert run(p, seed).records == oracle_run(ir, seed).records


def test_measure_same_qubit_twice(line4):
    p = compile_circuit(parse("qubits 1\nh 0\nmeasure 0\nmeasure 0"), line4)
    for seed in range(30):
        a, b = run(p, seed).records
        assert a == b


def test_seed_determinism(line4):
    ir = random_circuit(np.random.default_rng(8), 3, 12)
    p = compile_circuit(CircuitIR(3, ir.ops + (Measure(0), Measure(2))), line4)
    r1, r2 = run(p, 12345), run(p, 12345)
    assert r1.records == r2.records
    assert r1.final_state.tobytes() == r2.final_state.tobytes()


def test_norm_preserved(line4):
    ir = random_circuit(np.random.default_rng(9), 3, 12)
    p = compile_circuit(ir, line4)
    norms = []
    run(p, on_boundary=lambda i, s: norms.append(np.vdot(s, s).real))
    assert len(norms) == len(ir.ops)
    assert max(abs(n - 1) for n in norms) <= 1e-12


def test_boundaries_are_clean(line4):
    ir = random_circuit(np.random.default_rng(10), 3, 12)
    p = compile_circuit(ir, line4)
    masses = []
    run(p, on_boundary=lambda i, s: masses.append(conduit_mass(s, p)))
    assert max(masses) <= 1e-12


def test_size_cap(monkeypatch):
    p = Program(LatticeSpec((4, 1, 1)))
    with pytest.raises(SimulationSizeError):
        run(p, max_spins_=12)
    monkeypatch.setenv(MAX_SPINS_ENV, "10")
    with pytest.raises(SimulationSizeError):
        run(p)
    with pytest.raises(SimulationSizeError):
        oracle_run(CircuitIR(11))


def test_amplitude_dump_round_trip(tmp_path, line4):
    state = run(compile_circuit(parse("qubits 2\nh 0\nry 1 0.3"), line4)).final_state
    path = tmp_path / "amps.bin"
    dump_amplitudes(state, path)
    raw = path.read_bytes()
    assert len(raw) == 16 * (1 << 13)
    assert np.frombuffer(raw[:16], "<f8").tolist() == [state[0].real, state[0].imag]
    assert np.array_equal(load_amplitudes(path), state)


def test_verify_identity_circuit(line4):
    assert verify(CircuitIR(2), line4).min_fidelity == pytest.approx(1.0, abs=1e-12)


def test_verify_ghz(line4):
    report = verify(parse("qubits 3\nh 0\ncnot 0 1\ncnot 1 2"), line4, trials=4)
    assert report.min_fidelity >= 1 - 1e-9
    assert len(report.fidelities) == 4


def test_verify_with_measurements(line4):
    report = verify(parse("qubits 2\nh 0\ncnot 0 1\nmeasure 0\nmeasure 1"), line4, shots=100)
    assert report.record_agreement == 1.0
    assert report.total_variation == 0.0
    assert set(report.compiled_counts) <= {"00", "11"}


@pytest.mark.parametrize("cnot_in_d", ["control", "target"])
def test_all_cond_kinds_equivalent(line4, cnot_in_d):
    rng = np.random.default_rng(11)
    for _ in range(10):
        ir = random_circuit(rng, 3, 12)
        assert verify(ir, line4, trials=2, cnot_in_d=cnot_in_d).min_fidelity >= 1 - 1e-9


def test_cz_symmetric(line4):
    a = compile_circuit(parse("qubits 2\nh 0\nh 1\ncz 0 1"), line4)
    b = compile_circuit(parse("qubits 2\nh 0\nh 1\ncz 1 0"), line4)
    assert a.instructions != b.instructions
    assert fidelity(extract_logical(run(a).final_state, a), extract_logical(run(b).final_state, b)) == pytest.approx(1)


def test_loads_match_oracle(line4):
    ir = CircuitIR(3, (Load(0, "u3", (0.3, 1.2, -0.7)), Load(2, "h"), Load(1, "ry", (2.0,)), TwoQ("cnot", 2, 1)))
    assert verify(ir, line4).min_fidelity >= 1 - 1e-9


def test_explicit_placement_verified(line4):
    ir = random_circuit(np.random.default_rng(12), 3, 12)
    policy = PlacementPolicy({0: (3, 0, 0), 1: (1, 0, 0), 2: (2, 0, 0)})
    assert verify(ir, line4, policy, trials=2).min_fidelity >= 1 - 1e-9


def test_run_result_json_round_trip(line4):
    from qautomaton.simulator import RunResult

    res = run(compile_circuit(parse("qubits 1\nh 0\nmeasure 0"), line4), 3)
    back = RunResult.from_dict(res.to_dict())
    assert back.records == res.records and back.rng_seed == 3
    assert np.array_equal(back.final_state, res.final_state)
    assert "final_state" not in res.to_dict(include_state=False)
