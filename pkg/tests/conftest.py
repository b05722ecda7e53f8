import numpy as np
import pytest

from shardsim.circuit import gate_matrix
from shardsim.ket import DenseKet


def random_state(width: int, rng) -> np.ndarray:
    v = rng.normal(size=1 << width) + 1j * rng.normal(size=1 << width)
    return v / np.linalg.norm(v)


def random_unitary(rng) -> np.ndarray:
    z = rng.normal(size=(2, 2)) + 1j * rng.normal(size=(2, 2))
    q, r = np.linalg.qr(z)
    return q * (np.diag(r) / np.abs(np.diag(r)))


def naive_apply(amps: np.ndarray, width: int, m: np.ndarray, target: int,
                controls=(), polarity=()) -> np.ndarray:
    """Index-by-index oracle for (controlled) single-qubit gates.

    Deliberately shares no code with the vectorized kernels under test.
    """
    out = np.zeros_like(amps)
    for idx, amp in enumerate(amps):
        if any(((idx >> c) & 1) != pol for c, pol in zip(controls, polarity)):
            out[idx] += amp
            continue
        bit = (idx >> target) & 1
        out[idx & ~(1 << target)] += m[0, bit] * amp
        out[idx | (1 << target)] += m[1, bit] * amp
    return out


def naive_simulate(circuit) -> np.ndarray:
    """Gate-by-gate naive simulation used as an oracle for small widths."""
    amps = np.zeros(1 << circuit.width, dtype=complex)
    amps[0] = 1.0
    for g in circuit.gates:
        if g.name == "swap":
            a, b = g.targets
            out = np.empty_like(amps)
            for idx, amp in enumerate(amps):
                ba, bb = (idx >> a) & 1, (idx >> b) & 1
                j = idx & ~(1 << a) & ~(1 << b) | (bb << a) | (ba << b)
                out[j] = amp
            amps = out
        else:
            amps = naive_apply(amps, circuit.width, gate_matrix(g.name, g.params),
                               g.targets[0], g.controls, g.polarity)
    return amps


def reduced_density(amps: np.ndarray, width: int, q: int) -> np.ndarray:
    """2x2 reduced density matrix of qubit q (partial-trace oracle)."""
    rho = np.zeros((2, 2), dtype=complex)
    for i, ai in enumerate(amps):
        for b in (0, 1):
            j = (i & ~(1 << q)) | (b << q)
            rho[(i >> q) & 1, b] += ai * np.conj(amps[j])
    return rho


@pytest.fixture
def rng():
    return np.random.default_rng(20240817)


def ket_from(amps) -> DenseKet:
    return DenseKet.from_amplitudes(np.asarray(amps, dtype=complex))
