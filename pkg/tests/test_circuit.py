import math

import numpy as np
import pytest

from shardsim.circuit import (
    Circuit,
    CircuitParseError,
    Gate,
    build_ghz,
    build_qft,
    build_random_circuit,
    cp,
    cx,
    gate_matrix,
    grid_edges,
    grid_shape,
    h,
    parse_circuit,
    serialize_circuit,
    swap,
    u3_matrix,
)
from shardsim.validate import dense_reference, dft_oracle
from shardsim.ket import DenseKet

from conftest import random_state


class TestU3Matrix:
    def test_identity(self):
        assert np.allclose(u3_matrix(0, 0, 0), np.eye(2), atol=1e-15)

    def test_pauli_x(self):
        assert np.allclose(u3_matrix(math.pi, 0, math.pi),
                           np.array([[0, 1], [1, 0]]), atol=1e-12)

    def test_specific_angles_unitary(self):
        m = u3_matrix(math.pi / 2, 0.3, 1.1)
        assert np.max(np.abs(m.conj().T @ m - np.eye(2))) < 1e-12

    def test_unitary_1000_random_triples(self, rng):
        for _ in range(1000):
            m = u3_matrix(*rng.uniform(0, 2 * math.pi, 3))
            assert np.max(np.abs(m.conj().T @ m - np.eye(2))) < 1e-12


class TestGateAndCircuitInvariants:
    def test_duplicate_qubits_rejected(self):
        with pytest.raises(ValueError):
            Gate("x", (1,), controls=(1,), polarity=(1,))
        with pytest.raises(ValueError):
            swap(2, 2)

    def test_polarity_must_match_controls(self):
        with pytest.raises(ValueError):
            Gate("x", (0,), controls=(1,), polarity=())

    def test_controlled_inner_must_be_single_qubit(self):
        with pytest.raises(ValueError):
            Gate("swap", (0, 1), controls=(2,), polarity=(1,))

    def test_out_of_range_index_rejected(self):
        with pytest.raises(ValueError):
            Circuit(2, (h(5),))


class TestBuildQft:
    def test_rejects_zero(self):
        with pytest.raises(ValueError):
            build_qft(0)

    def test_one_qubit_is_hadamard(self):
        assert build_qft(1).gates == (h(0),)

    def test_two_qubit_structure(self):
        assert build_qft(2).gates == (h(1), cp(math.pi / 2, 0, 1), h(0), swap(0, 1))

    def test_two_qubit_uniform_from_zero(self):
        out = dense_reference(build_qft(2))
        assert np.allclose(out.amps, 0.5, atol=1e-12)

    def test_three_qubit_basis_state_vs_oracle(self):
        x = np.zeros(8, dtype=complex)
        x[1] = 1.0  # |001>: qubit 0 set
        got = dense_reference(build_qft(3), initial=DenseKet(3, x.copy()))
        assert np.max(np.abs(got.amps - dft_oracle(x))) < 1e-10

    def test_matches_dft_on_random_states(self, rng):
        # 200 random input states spread over n = 1..8
        for n in range(1, 9):
            qft = build_qft(n)
            for _ in range(25):
                x = random_state(n, rng)
                got = dense_reference(qft, initial=DenseKet(n, x.copy()))
                assert np.max(np.abs(got.amps - dft_oracle(x))) < 1e-9


class TestBuildGhz:
    def test_rejects_zero(self):
        with pytest.raises(ValueError):
            build_ghz(0)

    def test_one_qubit(self):
        assert build_ghz(1).gates == (h(0),)
        amps = dense_reference(build_ghz(1)).amps
        assert np.allclose(amps, [1 / math.sqrt(2)] * 2, atol=1e-12)

    def test_two_qubit_bell(self):
        amps = dense_reference(build_ghz(2)).amps
        assert np.allclose(amps, [1 / math.sqrt(2), 0, 0, 1 / math.sqrt(2)], atol=1e-12)

    def test_three_qubit_endpoints(self):
        amps = dense_reference(build_ghz(3)).amps
        assert abs(amps[0] - 1 / math.sqrt(2)) < 1e-12
        assert abs(amps[7] - 1 / math.sqrt(2)) < 1e-12
        assert np.max(np.abs(amps[1:7])) < 1e-12

    def test_structure(self):
        assert build_ghz(3).gates == (h(0), cx(0, 1), cx(1, 2))


class TestBuildRandomCircuit:
    def test_deterministic(self):
        a = build_random_circuit(4, 1, seed=7)
        b = build_random_circuit(4, 1, seed=7)
        assert a == b

    def test_rejects_bad_sizes(self):
        with pytest.raises(ValueError):
            build_random_circuit(1, 3, 0)
        with pytest.raises(ValueError):
            build_random_circuit(4, 0, 0)

    def test_u3_on_every_qubit_each_layer(self):
        width, depth = 6, 6
        c = build_random_circuit(width, depth, seed=3)
        u3s = [g for g in c.gates if g.name == "u3"]
        assert len(u3s) == width * depth
        # consecutive u3 runs are whole layers (a layer may have no couplers)
        runs, run = [], 0
        for g in c.gates:
            if g.name == "u3":
                run += 1
            elif run:
                runs.append(run)
                run = 0
        if run:
            runs.append(run)
        assert all(r % width == 0 for r in runs)
        for layer in range(depth):
            chunk = u3s[layer * width:(layer + 1) * width]
            assert sorted(g.targets[0] for g in chunk) == list(range(width))

    def test_layer_letters_follow_pattern(self):
        width, depth = 9, 8
        c = build_random_circuit(width, depth, seed=1)
        pattern = "ABCDCDAB"
        gates = list(c.gates)
        for layer in range(depth):
            del gates[:width]  # the u3 round
            expected = {frozenset(e) for e in grid_edges(width, pattern[layer])}
            couplers = []
            while gates and gates[0].controls:
                couplers.append(gates.pop(0))
            got = {frozenset((g.controls[0], g.targets[0])) for g in couplers}
            assert got == expected

    def test_couplers_are_grid_neighbors(self):
        width = 9
        rows, cols = grid_shape(width)
        c = build_random_circuit(width, 8, seed=1)
        for g in c.gates:
            if not g.controls:
                continue
            a, b = g.controls[0], g.targets[0]
            (ra, ca), (rb, cb) = divmod(a, cols), divmod(b, cols)
            assert abs(ra - rb) + abs(ca - cb) == 1

    def test_prefix_stability_across_depth(self):
        shallow = build_random_circuit(6, 3, seed=99)
        deep = build_random_circuit(6, 5, seed=99)
        assert deep.gates[: len(shallow.gates)] == shallow.gates


class TestCircuitFile:
    def test_parse_ghz2(self):
        c = parse_circuit("qubits 2\nh 0\ncx 0 1\n")
        assert c == build_ghz(2)

    def test_round_trip_ghz(self):
        c = build_ghz(2)
        assert parse_circuit(serialize_circuit(c)) == c

    def test_round_trip_random_circuit_exact_angles(self):
        c = build_random_circuit(5, 4, seed=11)
        assert parse_circuit(serialize_circuit(c)) == c

    def test_round_trip_all_mnemonics(self):
        text = ("qubits 3\n"
                "h 0\nx 1\ny 2\nz 0\n"
                "rz 0.25 1\np 1.5 2\nu3 0.1 0.2 0.3 0\n"
                "swap 0 2\ncx 0 1\ncy 1 2\ncz 2 0\n"
                "ax 0 1\nay 1 2\naz 2 0\ncp 0.75 0 2\nm 1\n")
        c = parse_circuit(text)
        assert parse_circuit(serialize_circuit(c)) == c

    def test_out_of_range_names_line(self):
        with pytest.raises(CircuitParseError) as err:
            parse_circuit("qubits 2\nh 5\n")
        assert err.value.line == 2
        assert "line 2" in str(err.value)

    def test_unknown_mnemonic_names_line(self):
        with pytest.raises(CircuitParseError) as err:
            parse_circuit("qubits 2\nh 0\nfoo 1\n")
        assert err.value.line == 3

    def test_wrong_arity_names_line(self):
        with pytest.raises(CircuitParseError) as err:
            parse_circuit("qubits 2\ncx 0\n")
        assert err.value.line == 2

    def test_missing_header(self):
        with pytest.raises(CircuitParseError):
            parse_circuit("h 0\n")

    def test_comments_and_blanks(self):
        c = parse_circuit("# a comment\n\nqubits 2\nh 0  # inline\n")
        assert c.width == 2 and len(c) == 1


def test_gate_matrix_rz_phase_relation():
    # rz(t) equals phase(t) up to global phase exp(-i t / 2)
    t = 0.7
    rzm = gate_matrix("rz", (t,))
    pm = gate_matrix("p", (t,))
    assert np.allclose(rzm, np.exp(-0.5j * t) * pm, atol=1e-15)
