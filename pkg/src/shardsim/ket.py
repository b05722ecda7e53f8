"""Dense statevector shards: contiguous complex amplitudes plus gate kernels.

Amplitude index convention: qubit 0 is the least-significant bit, so in the
``[2] * width`` tensor view qubit q lives on axis ``width - 1 - q``.

Instrumentation: ``alloc_count`` counts DenseKet allocations and
``amplitude_writes`` counts amplitudes written by mutating kernels.  Both are
plain module-global tallies used by tests and by the engine's bookkeeping
(single-writer contract, no locking).
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

alloc_count = 0
amplitude_writes = 0

_UNITARY_TOL = 1e-10


@dataclass(frozen=True)
class BlochVector:
    """Pauli expectation values (<X>, <Y>, <Z>) of one qubit's reduced state."""

    rx: float
    ry: float
    rz: float

    def length(self) -> float:
        return math.sqrt(self.rx * self.rx + self.ry * self.ry + self.rz * self.rz)


def epsilon_from_bloch(r: BlochVector) -> float:
    """Schmidt branch weight of the 1-vs-rest split: (1 - |r|) / 2, in [0, 0.5]."""
    return (1.0 - min(r.length(), 1.0)) / 2.0


def bloch_to_state(r: BlochVector) -> np.ndarray:
    """Unit Bloch vector -> the pure single-qubit state pointing along it."""
    norm = r.length()
    if norm < 1e-15:
        raise ValueError("zero Bloch vector has no associated pure state")
    nx, ny, nz = r.rx / norm, r.ry / norm, r.rz / norm
    # |phi> = (cos(t/2), e^{i a} sin(t/2)) with cos t = nz
    c = math.sqrt(max(0.0, (1.0 + nz) / 2.0))
    s = math.sqrt(max(0.0, (1.0 - nz) / 2.0))
    if s < 1e-15:
        return np.array([1.0, 0.0], dtype=complex)
    a = math.atan2(ny, nx)
    return np.array([c, s * np.exp(1j * a)], dtype=complex)


def _check_unitary(m: np.ndarray) -> None:
    if np.max(np.abs(m.conj().T @ m - np.eye(2))) > _UNITARY_TOL:
        raise ValueError("matrix is not unitary within 1e-10")


class DenseKet:
    """A ``width``-qubit shard of 2**width complex double amplitudes.

    Mutating kernels never renormalize; only projections rescale.  At most one
    mutating operation may run at a time (single-writer contract).
    """

    __slots__ = ("width", "amps")

    def __init__(self, width: int, amps: np.ndarray | None = None):
        global alloc_count
        if width < 1:
            raise ValueError("shard width must be >= 1")
        self.width = width
        if amps is None:
            self.amps = np.zeros(1 << width, dtype=complex)
            self.amps[0] = 1.0
        else:
            if amps.shape != (1 << width,):
                raise ValueError(f"need {1 << width} amplitudes, got {amps.shape}")
            self.amps = np.ascontiguousarray(amps, dtype=complex)
        alloc_count += 1

    @classmethod
    def from_amplitudes(cls, amps) -> "DenseKet":
        amps = np.asarray(amps, dtype=complex)
        width = int(round(math.log2(amps.size)))
        if 1 << width != amps.size:
            raise ValueError("amplitude count must be a power of two")
        return cls(width, amps.copy())

    def copy(self) -> "DenseKet":
        return DenseKet(self.width, self.amps.copy())

    def norm(self) -> float:
        return float(np.sqrt(np.sum(np.abs(self.amps) ** 2)))

    def _tensor(self) -> np.ndarray:
        return self.amps.reshape((2,) * self.width)

    def _axis(self, q: int) -> int:
        if not 0 <= q < self.width:
            raise IndexError(f"qubit {q} out of range for width {self.width}")
        return self.width - 1 - q

    def _views(self, q: int, controls=(), polarity=()):
        """(bit-0 view, bit-1 view) of qubit q restricted to matching controls.

        Length-1 slices (not integer indices) keep the results writable views
        of the amplitude array for any width.
        """
        t = self._tensor()
        sel: list = [slice(None)] * self.width
        for c, pol in zip(controls, polarity):
            a = self._axis(c)
            sel[a] = slice(pol, pol + 1)
        axis = self._axis(q)
        sel0, sel1 = list(sel), list(sel)
        sel0[axis] = slice(0, 1)
        sel1[axis] = slice(1, 2)
        return t[tuple(sel0)], t[tuple(sel1)]

    # ------------------------------------------------------------------
    # Kernels
    # ------------------------------------------------------------------

    def apply_1q(self, q: int, m: np.ndarray) -> None:
        """Apply a 2x2 unitary to qubit q."""
        _check_unitary(m)
        self._apply_1q_unchecked(q, m)

    def _apply_1q_unchecked(self, q: int, m: np.ndarray) -> None:
        global amplitude_writes
        a0, a1 = self._views(q)
        if abs(m[0, 1]) == 0.0 and abs(m[1, 0]) == 0.0:
            a0 *= m[0, 0]
            a1 *= m[1, 1]
        else:
            new0 = m[0, 0] * a0 + m[0, 1] * a1
            a1 *= m[1, 1]
            a1 += m[1, 0] * a0
            a0[...] = new0
        amplitude_writes += self.amps.size

    def apply_controlled(self, controls, polarity, target: int, m: np.ndarray) -> None:
        """Apply ``m`` to ``target`` on basis states whose control bits match polarity."""
        global amplitude_writes
        qubits = tuple(controls) + (target,)
        if len(set(qubits)) != len(qubits):
            raise ValueError(f"overlapping qubit indices {qubits}")
        _check_unitary(m)
        a0, a1 = self._views(target, controls, polarity)
        if abs(m[0, 1]) == 0.0 and abs(m[1, 0]) == 0.0:
            if m[0, 0] != 1.0:
                a0 *= m[0, 0]
            if m[1, 1] != 1.0:
                a1 *= m[1, 1]
        else:
            new0 = m[0, 0] * a0 + m[0, 1] * a1
            a1 *= m[1, 1]
            a1 += m[1, 0] * a0
            a0[...] = new0
        amplitude_writes += 2 * a0.size

    def apply_pauli_layer(self, ops) -> None:
        """Apply simultaneous Paulis [(qubit, 'x'|'y'|'z'), ...] in one traversal."""
        global amplitude_writes
        qubits = [q for q, _ in ops]
        if len(set(qubits)) != len(qubits):
            raise ValueError(f"duplicate qubit in pauli layer {qubits}")
        flip = 0
        sign_mask = 0
        y_count = 0
        for q, p in ops:
            self._axis(q)  # range check
            if p == "x":
                flip |= 1 << q
            elif p == "y":
                flip |= 1 << q
                sign_mask |= 1 << q
                y_count += 1
            elif p == "z":
                sign_mask |= 1 << q
            else:
                raise ValueError(f"unknown pauli {p!r}")
        n = self.amps.size
        scale = 1j ** (y_count % 4)
        if sign_mask:
            idx = np.arange(n, dtype=np.uint64)
            parity = np.bitwise_count(idx & np.uint64(sign_mask)) & np.uint64(1)
            phases = np.where(parity.astype(bool), -scale, scale)
        else:
            phases = scale
        # the phase belongs to the source amplitude: new[j ^ flip] = old[j] * f(j)
        if flip:
            src = np.arange(n, dtype=np.intp) ^ flip
            srcphases = phases[src] if sign_mask else phases
            self.amps = self.amps[src] * srcphases
        else:
            self.amps = self.amps * phases
        amplitude_writes += n

    def bloch_vector(self, q: int) -> BlochVector:
        """(<X>, <Y>, <Z>) of qubit q, all from one pass over the views."""
        a0, a1 = self._views(q)
        cross = np.sum(np.conj(a0) * a1)
        n0 = float(np.sum(np.abs(a0) ** 2))
        n1 = float(np.sum(np.abs(a1) ** 2))
        return BlochVector(2.0 * float(cross.real), 2.0 * float(cross.imag), n0 - n1)

    def project_and_renormalize(self, q: int, outcome: int) -> float:
        """Project qubit q onto ``outcome``, rescale to unit norm, return the
        pre-projection probability of that outcome."""
        global amplitude_writes
        if outcome not in (0, 1):
            raise ValueError(f"outcome must be 0 or 1, got {outcome}")
        a0, a1 = self._views(q)
        keep, drop = (a0, a1) if outcome == 0 else (a1, a0)
        prob = float(np.sum(np.abs(keep) ** 2))
        if prob <= 1e-12:
            raise ValueError(f"outcome {outcome} on qubit {q} has probability {prob:.3e}")
        drop[...] = 0.0
        keep *= 1.0 / math.sqrt(prob)
        amplitude_writes += self.amps.size
        return prob

    def probability(self, q: int, outcome: int) -> float:
        a0, a1 = self._views(q)
        return float(np.sum(np.abs(a0 if outcome == 0 else a1) ** 2))

    def amplitude(self, index: int) -> complex:
        return complex(self.amps[index])

    # ------------------------------------------------------------------
    # Composition and factorization
    # ------------------------------------------------------------------

    def kron_compose(self, other: "DenseKet") -> "DenseKet":
        """Tensor product; ``self`` keeps the low-order qubit positions."""
        return DenseKet(self.width + other.width, np.kron(other.amps, self.amps))

    def try_decompose(self, q: int, tol: float) -> tuple["DenseKet", "DenseKet"] | None:
        """Split qubit q out as an exact (within tol) single-qubit factor.

        Returns (single-qubit ket, remainder ket with q removed) when the
        1-vs-rest Schmidt weight is <= tol, else None.  The factors reproduce
        the input exactly up to O(tol) (no global-phase slip: the remainder is
        the dominant conditional column and the qubit state is recovered by
        projecting both columns onto it).
        """
        if self.width < 2:
            return None
        if tol < 0:
            raise ValueError("tolerance must be >= 0")
        eps = epsilon_from_bloch(self.bloch_vector(q))
        if eps > tol:
            return None
        a0, a1 = self._views(q)
        p0 = float(np.sum(np.abs(a0) ** 2))
        dominant = a0 if p0 >= 0.5 else a1
        rest = (dominant / math.sqrt(max(p0, 1.0 - p0))).reshape(-1)
        phi = np.array([np.vdot(rest, a0.reshape(-1)), np.vdot(rest, a1.reshape(-1))])
        phi /= np.sqrt(np.sum(np.abs(phi) ** 2))
        single = DenseKet(1, phi)
        rest = rest / np.sqrt(np.sum(np.abs(rest) ** 2))
        return single, DenseKet(self.width - 1, rest)

    def remove_qubit(self, q: int) -> "DenseKet":
        """Drop qubit q, assumed to be exactly |0> (used after projections)."""
        a0, a1 = self._views(q)
        residual = float(np.sum(np.abs(a1) ** 2))
        if residual > 1e-9:
            raise ValueError(f"qubit {q} is not in |0> (residual {residual:.3e})")
        return DenseKet(self.width - 1, a0.reshape(-1).copy())

    def fidelity(self, other: "DenseKet") -> float:
        """|<self|other>|**2; insensitive to global phase by construction."""
        if self.width != other.width:
            raise ValueError(f"width mismatch: {self.width} vs {other.width}")
        return float(np.abs(np.vdot(self.amps, other.amps)) ** 2)


def permute_qubits(ket: DenseKet, order) -> DenseKet:
    """Reorder qubits: new qubit k is old qubit order[k]."""
    order = list(order)
    if sorted(order) != list(range(ket.width)):
        raise ValueError(f"order must be a permutation of 0..{ket.width - 1}")
    w = ket.width
    # tensor axis of new qubit k must become the axis of old qubit order[k]
    axes = [w - 1 - order[w - 1 - a] for a in range(w)]
    return DenseKet(w, np.transpose(ket._tensor(), axes).reshape(-1).copy())
