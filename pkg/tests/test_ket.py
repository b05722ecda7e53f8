import math

import numpy as np
import pytest

import shardsim.ket as ketmod
from shardsim.circuit import gate_matrix
from shardsim.ket import BlochVector, DenseKet, epsilon_from_bloch, permute_qubits

from conftest import ket_from, naive_apply, random_state, random_unitary, reduced_density

SQ2 = 1 / math.sqrt(2)


class TestApply1q:
    def test_x_flips(self):
        s = DenseKet(1)
        s.apply_1q(0, gate_matrix("x"))
        assert np.allclose(s.amps, [0, 1], atol=1e-15)

    def test_h_superposes(self):
        s = DenseKet(1)
        s.apply_1q(0, gate_matrix("h"))
        assert np.allclose(s.amps, [SQ2, SQ2], atol=1e-15)

    def test_random_unitary_preserves_norm(self, rng):
        for _ in range(20):
            s = ket_from(random_state(3, rng))
            s.apply_1q(int(rng.integers(3)), random_unitary(rng))
            assert abs(s.norm() - 1.0) < 1e-10

    def test_rejects_non_unitary(self):
        s = DenseKet(1)
        with pytest.raises(ValueError):
            s.apply_1q(0, np.array([[1, 0], [0, 2]], dtype=complex))

    def test_rejects_bad_qubit(self):
        with pytest.raises(IndexError):
            DenseKet(2).apply_1q(2, gate_matrix("x"))

    def test_matches_naive_oracle(self, rng):
        for _ in range(25):
            w = int(rng.integers(1, 6))
            amps = random_state(w, rng)
            s = ket_from(amps)
            q = int(rng.integers(w))
            m = random_unitary(rng)
            s.apply_1q(q, m)
            assert np.max(np.abs(s.amps - naive_apply(amps, w, m, q))) < 1e-12


class TestApplyControlled:
    def test_cx_active(self):
        s = ket_from([0, 1, 0, 0])  # |01>: qubit 0 set
        s.apply_controlled((0,), (1,), 1, gate_matrix("x"))
        assert np.allclose(s.amps, [0, 0, 0, 1], atol=1e-15)

    def test_anti_control_inactive(self):
        s = ket_from([0, 1, 0, 0])
        s.apply_controlled((0,), (0,), 1, gate_matrix("x"))
        assert np.allclose(s.amps, [0, 1, 0, 0], atol=1e-15)

    def test_cphase_on_bell(self):
        s = ket_from([SQ2, 0, 0, SQ2])
        s.apply_controlled((0,), (1,), 1, gate_matrix("p", (math.pi / 2,)))
        assert np.allclose(s.amps, [SQ2, 0, 0, 1j * SQ2], atol=1e-12)

    def test_rejects_overlap(self):
        with pytest.raises(ValueError):
            DenseKet(2).apply_controlled((1,), (1,), 1, gate_matrix("x"))

    def test_matches_brute_force_for_small_widths(self, rng):
        # kernel equivalence vs an index-wise oracle, w <= 5
        for _ in range(40):
            w = int(rng.integers(2, 6))
            amps = random_state(w, rng)
            qubits = list(rng.permutation(w))
            n_ctrl = int(rng.integers(1, min(w, 3)))
            controls = tuple(qubits[:n_ctrl])
            target = qubits[n_ctrl]
            polarity = tuple(int(b) for b in rng.integers(0, 2, n_ctrl))
            m = random_unitary(rng)
            s = ket_from(amps)
            s.apply_controlled(controls, polarity, target, m)
            want = naive_apply(amps, w, m, target, controls, polarity)
            assert np.max(np.abs(s.amps - want)) < 1e-10


class TestPauliLayer:
    def test_double_x(self):
        s = DenseKet(2)
        s.apply_pauli_layer([(0, "x"), (1, "x")])
        assert np.allclose(s.amps, [0, 0, 0, 1], atol=1e-15)

    def test_z_on_plus(self):
        s = ket_from([SQ2, SQ2])
        s.apply_pauli_layer([(0, "z")])
        assert np.allclose(s.amps, [SQ2, -SQ2], atol=1e-15)

    def test_duplicate_qubit_rejected(self):
        with pytest.raises(ValueError):
            DenseKet(2).apply_pauli_layer([(0, "x"), (0, "z")])

    def test_matches_sequential_application(self, rng):
        paulis = "xyz"
        for _ in range(30):
            w = 4
            amps = random_state(w, rng)
            qubits = rng.permutation(w)[: int(rng.integers(1, w + 1))]
            layer = [(int(q), paulis[rng.integers(3)]) for q in qubits]
            fused = ket_from(amps)
            fused.apply_pauli_layer(layer)
            seq = ket_from(amps)
            for q, p in layer:
                seq.apply_1q(q, gate_matrix(p))
            assert np.max(np.abs(fused.amps - seq.amps)) < 1e-12


class TestBloch:
    def test_zero_state(self):
        r = DenseKet(1).bloch_vector(0)
        assert np.allclose([r.rx, r.ry, r.rz], [0, 0, 1], atol=1e-15)

    def test_plus_state(self):
        r = ket_from([SQ2, SQ2]).bloch_vector(0)
        assert np.allclose([r.rx, r.ry, r.rz], [1, 0, 0], atol=1e-12)

    def test_bell_qubits_maximally_mixed(self):
        s = ket_from([SQ2, 0, 0, SQ2])
        for q in (0, 1):
            r = s.bloch_vector(q)
            assert r.length() < 1e-12

    def test_epsilon_examples(self):
        assert epsilon_from_bloch(BlochVector(0, 0, 1)) == 0.0
        assert epsilon_from_bloch(BlochVector(0, 0, 0)) == 0.5
        assert abs(epsilon_from_bloch(BlochVector(0.6, 0, 0.8))) < 1e-12

    def test_epsilon_matches_density_matrix_oracle(self, rng):
        for _ in range(30):
            w = int(rng.integers(2, 6))
            amps = random_state(w, rng)
            q = int(rng.integers(w))
            eps = epsilon_from_bloch(ket_from(amps).bloch_vector(q))
            top = max(np.linalg.eigvalsh(reduced_density(amps, w, q)).real)
            assert abs(eps - (1 - top)) < 1e-10


class TestProjection:
    def test_plus_to_zero(self):
        s = ket_from([SQ2, SQ2])
        p = s.project_and_renormalize(0, 0)
        assert abs(p - 0.5) < 1e-12
        assert np.allclose(s.amps, [1, 0], atol=1e-12)

    def test_bell_collapse(self):
        s = ket_from([SQ2, 0, 0, SQ2])
        p = s.project_and_renormalize(0, 1)
        assert abs(p - 0.5) < 1e-12
        assert np.allclose(s.amps, [0, 0, 0, 1], atol=1e-12)

    def test_probability_matches_direct_sum(self, rng):
        for _ in range(20):
            amps = random_state(3, rng)
            q = int(rng.integers(3))
            want = sum(abs(a) ** 2 for i, a in enumerate(amps) if (i >> q) & 1)
            s = ket_from(amps)
            p = s.project_and_renormalize(q, 1)
            assert abs(p - want) < 1e-12
            assert abs(s.norm() - 1.0) < 1e-12

    def test_zero_probability_rejected(self):
        with pytest.raises(ValueError):
            DenseKet(1).project_and_renormalize(0, 1)


class TestComposeDecompose:
    def test_kron_basis(self):
        a = DenseKet(1)                      # |0>
        b = ket_from([0, 1])                 # |1>
        c = a.kron_compose(b)                # qubit 0 low -> |10> = index 2
        assert np.allclose(c.amps, [0, 0, 1, 0], atol=1e-15)

    def test_kron_plus_plus(self):
        plus = ket_from([SQ2, SQ2])
        c = plus.kron_compose(ket_from([SQ2, SQ2]))
        assert np.allclose(c.amps, [0.5] * 4, atol=1e-12)

    def test_decompose_recovers_product_factors(self, rng):
        for _ in range(20):
            a = ket_from(random_state(1, rng))
            b = ket_from(random_state(2, rng))
            s = a.kron_compose(b)
            res = s.try_decompose(0, 1e-12)
            assert res is not None
            single, rest = res
            assert single.kron_compose(rest).fidelity(s) > 1 - 1e-10

    def test_decompose_reconstruction_is_phase_exact(self, rng):
        a = ket_from(random_state(1, rng))
        b = ket_from(random_state(3, rng))
        s = a.kron_compose(b)
        single, rest = s.try_decompose(0, 1e-12)
        assert np.max(np.abs(single.kron_compose(rest).amps - s.amps)) < 1e-10

    def test_bell_is_not_decomposable(self):
        s = ket_from([SQ2, 0, 0, SQ2])
        assert s.try_decompose(0, 1e-12) is None
        assert s.try_decompose(1, 1e-12) is None

    def test_known_epsilon_honors_tolerance(self, rng):
        a = ket_from(random_state(2, rng)).amps
        perp = random_state(2, rng)
        perp -= np.vdot(a, perp) * a
        perp /= np.linalg.norm(perp)
        amps = math.sqrt(0.999) * np.kron(a, [1, 0]) + math.sqrt(0.001) * np.kron(perp, [0, 1])
        assert ket_from(amps).try_decompose(0, 1e-6) is None
        assert ket_from(amps).try_decompose(0, 1e-3) is not None

    def test_decompose_middle_qubit(self, rng):
        lo = ket_from(random_state(1, rng))
        mid = ket_from(random_state(1, rng))
        hi = ket_from(random_state(1, rng))
        s = lo.kron_compose(mid).kron_compose(hi)
        single, rest = s.try_decompose(1, 1e-12)
        assert abs(abs(np.vdot(single.amps, mid.amps)) - 1) < 1e-10
        assert abs(abs(np.vdot(rest.amps, lo.kron_compose(hi).amps)) - 1) < 1e-10


class TestFidelity:
    def test_self(self, rng):
        s = ket_from(random_state(3, rng))
        assert abs(s.fidelity(s) - 1) < 1e-12

    def test_orthogonal(self):
        assert ket_from([1, 0]).fidelity(ket_from([0, 1])) == 0.0

    def test_global_phase_invariant(self):
        s = DenseKet(1)
        t = ket_from(np.exp(1j * math.pi / 3) * s.amps)
        assert abs(s.fidelity(t) - 1) < 1e-12

    def test_width_mismatch(self):
        with pytest.raises(ValueError):
            DenseKet(1).fidelity(DenseKet(2))


class TestNormAndAccounting:
    def test_norm_preserved_through_random_sequences(self, rng):
        s = ket_from(random_state(4, rng))
        for _ in range(60):
            kind = rng.integers(3)
            if kind == 0:
                s.apply_1q(int(rng.integers(4)), random_unitary(rng))
            elif kind == 1:
                c, t = rng.permutation(4)[:2]
                s.apply_controlled((int(c),), (1,), int(t), random_unitary(rng))
            else:
                s.apply_pauli_layer([(int(rng.integers(4)), "xyz"[rng.integers(3)])])
        assert abs(s.norm() - 1.0) < 1e-9

    def test_allocation_counter_moves(self):
        before = ketmod.alloc_count
        DenseKet(3)
        assert ketmod.alloc_count == before + 1


class TestPermute:
    def test_permute_matches_index_shuffle(self, rng):
        amps = random_state(3, rng)
        s = ket_from(amps)
        order = [2, 0, 1]  # new qubit k holds old qubit order[k]
        out = permute_qubits(s, order)
        for idx in range(8):
            old = 0
            for k in range(3):
                if (idx >> k) & 1:
                    old |= 1 << order[k]
            assert abs(out.amps[idx] - amps[old]) < 1e-15
