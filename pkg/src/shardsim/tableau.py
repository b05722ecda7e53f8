"""CHP-style stabilizer tableau with a replayable gate/measurement log.

The tableau is the standard binary-symplectic layout: rows 0..w-1 are
destabilizer generators, rows w..2w-1 stabilizer generators, each row an
(x bits, z bits, phase bit) triple.  Every applied gate is decomposed into
the primitive set {h, s, x, y, z, swap, cx} and appended to ``log`` together
with forced/observed measurement outcomes, so an exact dense ket can always
be recovered by replaying the log from |0..0> (measurements replayed as
post-selected projections).
"""

from __future__ import annotations

import numpy as np

from .circuit import Gate, gate_matrix
from .ket import DenseKet

_CLIFFORD_MATCH_TOL = 1e-12


class StabilizerShard:
    """Stabilizer state of ``width`` qubits, |0..0> at construction."""

    __slots__ = ("width", "x", "z", "r", "log")

    def __init__(self, width: int):
        if width < 1:
            raise ValueError("tableau width must be >= 1")
        self.width = width
        self.x = np.zeros((2 * width, width), dtype=np.uint8)
        self.z = np.zeros((2 * width, width), dtype=np.uint8)
        self.r = np.zeros(2 * width, dtype=np.uint8)
        for i in range(width):
            self.x[i, i] = 1          # destabilizer X_i
            self.z[width + i, i] = 1  # stabilizer Z_i
        self.log: list[tuple] = []

    def copy(self) -> "StabilizerShard":
        t = StabilizerShard.__new__(StabilizerShard)
        t.width = self.width
        t.x = self.x.copy()
        t.z = self.z.copy()
        t.r = self.r.copy()
        t.log = list(self.log)
        return t

    # ------------------------------------------------------------------
    # Primitive conjugation rules
    # ------------------------------------------------------------------

    def _h(self, q: int) -> None:
        self.r ^= self.x[:, q] & self.z[:, q]
        tmp = self.x[:, q].copy()
        self.x[:, q] = self.z[:, q]
        self.z[:, q] = tmp
        self.log.append(("h", q))

    def _s(self, q: int) -> None:
        self.r ^= self.x[:, q] & self.z[:, q]
        self.z[:, q] ^= self.x[:, q]
        self.log.append(("s", q))

    def _x(self, q: int) -> None:
        self.r ^= self.z[:, q]
        self.log.append(("x", q))

    def _y(self, q: int) -> None:
        self.r ^= self.x[:, q] ^ self.z[:, q]
        self.log.append(("y", q))

    def _z(self, q: int) -> None:
        self.r ^= self.x[:, q]
        self.log.append(("z", q))

    def _swap(self, a: int, b: int) -> None:
        self.x[:, [a, b]] = self.x[:, [b, a]]
        self.z[:, [a, b]] = self.z[:, [b, a]]
        self.log.append(("swap", a, b))

    def _cx(self, c: int, t: int) -> None:
        xc, zc = self.x[:, c], self.z[:, c]
        xt, zt = self.x[:, t], self.z[:, t]
        self.r ^= xc & zt & (xt ^ zc ^ 1)
        self.x[:, t] = xt ^ xc
        self.z[:, c] = zc ^ zt
        self.log.append(("cx", c, t))

    # ------------------------------------------------------------------
    # Public gate interface
    # ------------------------------------------------------------------

    def apply_clifford(self, g: Gate) -> None:
        """Apply a Clifford gate (caller screens with is_clifford)."""
        for q in g.qubits:
            if not 0 <= q < self.width:
                raise IndexError(f"qubit {q} out of range for width {self.width}")
        if g.name == "swap":
            self._swap(*g.targets)
            return
        if g.controls:
            if len(g.controls) != 1:
                raise ValueError("tableau supports single-control Cliffords only")
            c, t = g.controls[0], g.targets[0]
            m = gate_matrix(g.name, g.params)
            which = next((p for p in ("x", "y", "z")
                          if np.max(np.abs(m - gate_matrix(p))) < _CLIFFORD_MATCH_TOL), None)
            if which is None:
                if np.max(np.abs(m - np.eye(2))) < _CLIFFORD_MATCH_TOL:
                    return  # controlled identity
                raise ValueError(f"controlled {g.name}{g.params} is not a tableau Clifford")
            anti = g.polarity[0] == 0
            if anti:
                self._x(c)
            if which == "x":
                self._cx(c, t)
            elif which == "z":
                self._h(t)
                self._cx(c, t)
                self._h(t)
            else:
                # CY = S(t) CX S^dag(t) as operators; rightmost applies first
                self._s(t)
                self._s(t)
                self._s(t)
                self._cx(c, t)
                self._s(t)
            if anti:
                self._x(c)
            return
        hit = match_clifford_1q(gate_matrix(g.name, g.params))
        if hit is None:
            raise ValueError(f"{g.name}{g.params} is not Clifford")
        word, phase = hit
        self.apply_1q_word(word, g.targets[0])
        self.append_phase(phase)

    def apply_1q_word(self, word: str, q: int) -> None:
        """Apply a product of h/s primitives given as a word, leftmost first."""
        for ch in word:
            if ch == "h":
                self._h(q)
            elif ch == "s":
                self._s(q)
            else:
                raise ValueError(f"bad clifford word letter {ch!r}")

    def append_phase(self, phase: complex) -> None:
        """Record a global phase so log replay stays amplitude-exact."""
        if abs(phase - 1.0) > 1e-15:
            self.log.append(("gphase", complex(phase)))

    # ------------------------------------------------------------------
    # Row arithmetic (Aaronson-Gottesman rowsum, batched)
    # ------------------------------------------------------------------

    def _rowsum_batch(self, targets: np.ndarray, src: int) -> None:
        """rowsum(row, src) for every row index in ``targets`` at once."""
        if targets.size == 0:
            return
        xs = np.packbits(self.x[targets], axis=1)
        zs = np.packbits(self.z[targets], axis=1)
        xp = np.packbits(self.x[src])[None, :]
        zp = np.packbits(self.z[src])[None, :]
        g = _g_counts(xp, zp, xs, zs, axis=1)
        val = 2 * self.r[targets].astype(np.int64) + 2 * int(self.r[src]) + g
        self.r[targets] = ((val % 4) // 2).astype(np.uint8)
        self.x[targets] ^= self.x[src]
        self.z[targets] ^= self.z[src]

    def _product_phase(self, stab_rows: np.ndarray) -> int:
        """Phase exponent (mod 4, always 0 or 2 here) of the ordered product
        of the given stabilizer rows, scratch-row style but vectorized via
        exclusive prefix parities on bit-packed rows."""
        if stab_rows.size == 0:
            return 0
        xs = np.packbits(self.x[stab_rows], axis=1)
        zs = np.packbits(self.z[stab_rows], axis=1)
        px = np.zeros_like(xs)
        pz = np.zeros_like(zs)
        np.bitwise_xor.accumulate(xs[:-1], axis=0, out=px[1:])
        np.bitwise_xor.accumulate(zs[:-1], axis=0, out=pz[1:])
        g = int(_g_counts(xs, zs, px, pz))
        return (2 * int(self.r[stab_rows].sum()) + g) % 4

    # ------------------------------------------------------------------
    # Measurement and state queries
    # ------------------------------------------------------------------

    def measure(self, q: int, rng, forced: int | None = None) -> int:
        """Z-measure qubit q; random outcomes use ``rng`` unless ``forced``."""
        if not 0 <= q < self.width:
            raise IndexError(f"qubit {q} out of range for width {self.width}")
        w = self.width
        stab_x = self.x[w:, q]
        hits = np.nonzero(stab_x)[0]
        if hits.size:
            p = w + int(hits[0])
            others = np.nonzero(self.x[:, q])[0]
            self._rowsum_batch(others[others != p], p)
            self.x[p - w] = self.x[p]
            self.z[p - w] = self.z[p]
            self.r[p - w] = self.r[p]
            self.x[p] = 0
            self.z[p] = 0
            self.z[p, q] = 1
            outcome = int(rng.integers(0, 2)) if forced is None else int(forced)
            self.r[p] = outcome
        else:
            outcome = self._deterministic_outcome(q)
            if forced is not None and forced != outcome:
                raise ValueError(f"cannot force outcome {forced}: qubit {q} is "
                                 f"deterministically {outcome}")
        self.log.append(("m", q, outcome))
        return outcome

    def _deterministic_outcome(self, q: int) -> int:
        w = self.width
        sel = np.nonzero(self.x[:w, q])[0]
        return self._product_phase(sel + w) // 2

    def deterministic_eigen(self, q: int) -> tuple[str, int] | None:
        """('x'|'y'|'z', +-1) when qubit q is a deterministic Pauli eigenstate.

        A single qubit of a stabilizer state is either such an eigenstate
        (unentangled) or maximally mixed; returns None in the mixed case.
        """
        w = self.width
        xcol = self.x[w:, q].astype(np.int32)
        zcol = self.z[w:, q].astype(np.int32)
        for basis in ("z", "x", "y"):
            if basis == "z":
                anti = xcol
            elif basis == "x":
                anti = zcol
            else:
                anti = xcol ^ zcol
            if anti.any():
                continue
            sign = self._pauli_sign(q, basis)
            return basis, sign
        return None

    def _pauli_sign(self, q: int, basis: str) -> int:
        """Sign s with s*P_q in the stabilizer group (P assumed to commute)."""
        w = self.width
        dx = self.x[:w, q].astype(np.int32)
        dz = self.z[:w, q].astype(np.int32)
        if basis == "z":
            sel = dx
        elif basis == "x":
            sel = dz
        else:
            sel = dx ^ dz
        acc = self._product_phase(np.nonzero(sel)[0] + w)
        return 1 if acc // 2 == 0 else -1

    def to_ket(self) -> DenseKet:
        """Exact dense state: replay the log on |0..0>, post-selecting
        recorded measurement outcomes."""
        s = DenseKet(self.width)
        _H = gate_matrix("h")
        _S = gate_matrix("p", (np.pi / 2,))
        for entry in self.log:
            op = entry[0]
            if op == "h":
                s._apply_1q_unchecked(entry[1], _H)
            elif op == "s":
                s._apply_1q_unchecked(entry[1], _S)
            elif op in ("x", "y", "z"):
                s._apply_1q_unchecked(entry[1], gate_matrix(op))
            elif op == "swap":
                s.amps = _swap_bits(s.amps, entry[1], entry[2], self.width)
            elif op == "cx":
                s.apply_controlled((entry[1],), (1,), entry[2], gate_matrix("x"))
            elif op == "m":
                s.project_and_renormalize(entry[1], entry[2])
            elif op == "gphase":
                s.amps *= entry[1]
            else:
                raise AssertionError(f"unknown log entry {entry!r}")
        return s


def _g_counts(x1, z1, x2, z2, axis=None):
    """Sum of Aaronson-Gottesman g exponents over bit-packed Pauli rows.

    The left Pauli (x1, z1) is split by letter; g is +1/-1 exactly on the
    disjoint bit patterns below, so the sum is a popcount difference.
    """
    y1 = x1 & z1
    xonly = x1 & ~z1
    zonly = ~x1 & z1
    plus = (y1 & z2 & ~x2) | (xonly & z2 & x2) | (zonly & x2 & ~z2)
    minus = (y1 & x2 & ~z2) | (xonly & z2 & ~x2) | (zonly & x2 & z2)
    pc = np.bitwise_count(plus).astype(np.int64) - np.bitwise_count(minus).astype(np.int64)
    return pc.sum(axis=axis) if axis is not None else int(pc.sum())


def _swap_bits(amps: np.ndarray, a: int, b: int, width: int) -> np.ndarray:
    t = amps.reshape((2,) * width)
    axes = list(range(width))
    aa, ab = width - 1 - a, width - 1 - b
    axes[aa], axes[ab] = axes[ab], axes[aa]
    return np.transpose(t, axes).reshape(-1).copy()


def merge_tableaus(a: StabilizerShard, b: StabilizerShard) -> StabilizerShard:
    """Tensor product; ``a`` keeps its qubit positions, ``b`` shifts up by a.width."""
    w = a.width + b.width
    out = StabilizerShard.__new__(StabilizerShard)
    out.width = w
    out.x = np.zeros((2 * w, w), dtype=np.uint8)
    out.z = np.zeros((2 * w, w), dtype=np.uint8)
    out.r = np.zeros(2 * w, dtype=np.uint8)
    wa, wb = a.width, b.width
    # destabilizers then stabilizers, block diagonal
    out.x[:wa, :wa] = a.x[:wa]
    out.z[:wa, :wa] = a.z[:wa]
    out.r[:wa] = a.r[:wa]
    out.x[wa:w, wa:] = b.x[:wb]
    out.z[wa:w, wa:] = b.z[:wb]
    out.r[wa:w] = b.r[:wb]
    out.x[w:w + wa, :wa] = a.x[wa:]
    out.z[w:w + wa, :wa] = a.z[wa:]
    out.r[w:w + wa] = a.r[wa:]
    out.x[w + wa:, wa:] = b.x[wb:]
    out.z[w + wa:, wa:] = b.z[wb:]
    out.r[w + wa:] = b.r[wb:]
    out.log = list(a.log) + [_shift_entry(e, wa) for e in b.log]
    return out


def _shift_entry(entry: tuple, offset: int) -> tuple:
    op = entry[0]
    if op in ("h", "s", "x", "y", "z"):
        return (op, entry[1] + offset)
    if op in ("swap", "cx"):
        return (op, entry[1] + offset, entry[2] + offset)
    if op == "m":
        return (op, entry[1] + offset, entry[2])
    if op == "gphase":
        return entry
    raise AssertionError(f"unknown log entry {entry!r}")


# ---------------------------------------------------------------------------
# Single-qubit Clifford recognition
# ---------------------------------------------------------------------------

def _canonical_key(m: np.ndarray) -> bytes:
    flat = m.reshape(-1)
    pivot = next(v for v in flat if abs(v) > 0.4)
    normalized = flat * (abs(pivot) / pivot)
    return (np.round(normalized, 9) + (0.0 + 0.0j)).tobytes()  # kill -0.0


def _build_clifford_words() -> dict[bytes, tuple[str, np.ndarray]]:
    h_mat = gate_matrix("h")
    s_mat = gate_matrix("p", (np.pi / 2,))
    table: dict[bytes, tuple[str, np.ndarray]] = {}
    frontier = [("", np.eye(2, dtype=complex))]
    table[_canonical_key(frontier[0][1])] = frontier[0]
    while frontier:
        nxt = []
        for word, mat in frontier:
            for letter, gen in (("h", h_mat), ("s", s_mat)):
                cand = gen @ mat
                key = _canonical_key(cand)
                if key not in table:
                    entry = (word + letter, cand)
                    table[key] = entry
                    nxt.append(entry)
        frontier = nxt
    assert len(table) == 24, f"expected 24 single-qubit Cliffords, built {len(table)}"
    return table


_CLIFFORD_WORDS = _build_clifford_words()


def match_clifford_1q(m: np.ndarray) -> tuple[str, complex] | None:
    """(primitive word, global phase) with m == phase * word-product, or None.

    The word is a string over {h, s} applied leftmost-first; matching is up to
    global phase within 1e-12.
    """
    try:
        key = _canonical_key(m)
    except StopIteration:
        return None
    entry = _CLIFFORD_WORDS.get(key)
    if entry is None:
        return None
    word, cand = entry
    tr = np.trace(cand.conj().T @ m) / 2.0
    if abs(abs(tr) - 1.0) > 1e-9:
        return None
    phase = tr / abs(tr)
    if np.max(np.abs(m - phase * cand)) > _CLIFFORD_MATCH_TOL:
        return None
    return word, complex(phase)


def is_clifford(g: Gate) -> bool:
    """True when the gate normalizes the Pauli group (tableau-simulable).

    Covers H/X/Y/Z/S-like single-qubit gates (including U3 parameter triples
    that coincide with a Clifford up to global phase), SWAP, and single-control
    X/Y/Z couplers of either polarity (anti-controls reduce via X conjugation).
    """
    if g.name == "swap":
        return True
    if g.name == "m":
        return False
    if g.controls:
        if len(g.controls) != 1:
            return False
        m = gate_matrix(g.name, g.params)
        for pauli in ("x", "y", "z"):
            if np.max(np.abs(m - gate_matrix(pauli))) < _CLIFFORD_MATCH_TOL:
                return True
        if np.max(np.abs(m - np.eye(2))) < _CLIFFORD_MATCH_TOL:
            return True
        return False
    return match_clifford_1q(gate_matrix(g.name, g.params)) is not None
