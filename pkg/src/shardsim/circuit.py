"""Circuit IR, gate algebra, deterministic builders and the text file format.

Conventions (fixed for the whole package):

* Qubit 0 is the least-significant bit of a computational-basis index, so
  basis state ``|b_{n-1} ... b_1 b_0>`` has index ``sum(b_q << q)``.
* Angles are radians.
* A controlled gate stores its single-qubit inner operation in ``name`` /
  ``params`` plus ``controls`` and a per-control ``polarity`` bit
  (1 = activate on |1>, 0 = activate on |0>).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

LETTER_PATTERN = "ABCDCDAB"

_SINGLE_QUBIT = {"h", "x", "y", "z", "rz", "p", "u3"}
_PARAM_COUNT = {"h": 0, "x": 0, "y": 0, "z": 0, "rz": 1, "p": 1, "u3": 3,
                "swap": 0, "m": 0}


class CircuitParseError(ValueError):
    """Malformed circuit text; ``line`` is the 1-based offending line."""

    def __init__(self, line: int, message: str):
        super().__init__(f"line {line}: {message}")
        self.line = line


@dataclass(frozen=True)
class Gate:
    """One operation: a named single/two-qubit gate, optionally controlled.

    ``targets`` holds the qubit(s) the inner operation acts on (two only for
    ``swap``).  ``controls``/``polarity`` are empty for uncontrolled gates.
    """

    name: str
    targets: tuple[int, ...]
    params: tuple[float, ...] = ()
    controls: tuple[int, ...] = ()
    polarity: tuple[int, ...] = ()

    def __post_init__(self):
        if self.name not in _PARAM_COUNT:
            raise ValueError(f"unknown gate kind {self.name!r}")
        if len(self.params) != _PARAM_COUNT[self.name]:
            raise ValueError(f"{self.name} takes {_PARAM_COUNT[self.name]} "
                             f"parameter(s), got {len(self.params)}")
        if self.controls:
            if self.name not in _SINGLE_QUBIT:
                raise ValueError(f"controlled inner gate must be single-qubit, got {self.name!r}")
            if len(self.polarity) != len(self.controls):
                raise ValueError("polarity length must equal controls length")
            if any(p not in (0, 1) for p in self.polarity):
                raise ValueError("polarity bits must be 0 or 1")
        elif self.polarity:
            raise ValueError("polarity given without controls")
        expected_targets = 2 if self.name == "swap" else 1
        if len(self.targets) != expected_targets:
            raise ValueError(f"{self.name} takes {expected_targets} target(s)")
        qubits = self.targets + self.controls
        if len(set(qubits)) != len(qubits):
            raise ValueError(f"duplicate qubit in {self.name}: {qubits}")

    @property
    def qubits(self) -> tuple[int, ...]:
        return self.targets + self.controls


@dataclass(frozen=True)
class Circuit:
    """An ordered gate sequence over ``width`` qubits."""

    width: int
    gates: tuple[Gate, ...] = field(default_factory=tuple)

    def __post_init__(self):
        if self.width < 1:
            raise ValueError("circuit width must be >= 1")
        object.__setattr__(self, "gates", tuple(self.gates))
        for g in self.gates:
            for q in g.qubits:
                if not 0 <= q < self.width:
                    raise ValueError(f"qubit {q} out of range for width {self.width}")

    def __len__(self) -> int:
        return len(self.gates)


# ---------------------------------------------------------------------------
# Gate constructors
# ---------------------------------------------------------------------------

def h(q: int) -> Gate:
    return Gate("h", (q,))


def x(q: int) -> Gate:
    return Gate("x", (q,))


def y(q: int) -> Gate:
    return Gate("y", (q,))


def z(q: int) -> Gate:
    return Gate("z", (q,))


def rz(theta: float, q: int) -> Gate:
    return Gate("rz", (q,), (float(theta),))


def phase(theta: float, q: int) -> Gate:
    return Gate("p", (q,), (float(theta),))


def u3(theta: float, phi: float, lam: float, q: int) -> Gate:
    return Gate("u3", (q,), (float(theta), float(phi), float(lam)))


def swap(a: int, b: int) -> Gate:
    return Gate("swap", (a, b))


def measure(q: int) -> Gate:
    return Gate("m", (q,))


def controlled(inner: Gate, controls: tuple[int, ...], polarity: tuple[int, ...]) -> Gate:
    return Gate(inner.name, inner.targets, inner.params, tuple(controls), tuple(polarity))


def cx(c: int, t: int) -> Gate:
    return Gate("x", (t,), controls=(c,), polarity=(1,))


def cy(c: int, t: int) -> Gate:
    return Gate("y", (t,), controls=(c,), polarity=(1,))


def cz(c: int, t: int) -> Gate:
    return Gate("z", (t,), controls=(c,), polarity=(1,))


def ax(c: int, t: int) -> Gate:
    return Gate("x", (t,), controls=(c,), polarity=(0,))


def ay(c: int, t: int) -> Gate:
    return Gate("y", (t,), controls=(c,), polarity=(0,))


def az(c: int, t: int) -> Gate:
    return Gate("z", (t,), controls=(c,), polarity=(0,))


def cp(theta: float, c: int, t: int) -> Gate:
    return Gate("p", (t,), (float(theta),), controls=(c,), polarity=(1,))


# ---------------------------------------------------------------------------
# Gate matrices
# ---------------------------------------------------------------------------

_H = np.array([[1, 1], [1, -1]], dtype=complex) / math.sqrt(2)
_X = np.array([[0, 1], [1, 0]], dtype=complex)
_Y = np.array([[0, -1j], [1j, 0]], dtype=complex)
_Z = np.array([[1, 0], [0, -1]], dtype=complex)


def u3_matrix(theta: float, phi: float, lam: float) -> np.ndarray:
    """General single-qubit unitary from its three rotation angles."""
    c, s = math.cos(theta / 2.0), math.sin(theta / 2.0)
    return np.array(
        [[c, -np.exp(1j * lam) * s],
         [np.exp(1j * phi) * s, np.exp(1j * (phi + lam)) * c]],
        dtype=complex,
    )


def gate_matrix(name: str, params: tuple[float, ...] = ()) -> np.ndarray:
    """2x2 matrix of a single-qubit gate kind (the inner op for controlled gates)."""
    if name == "h":
        return _H.copy()
    if name == "x":
        return _X.copy()
    if name == "y":
        return _Y.copy()
    if name == "z":
        return _Z.copy()
    if name == "rz":
        t = params[0]
        return np.array([[np.exp(-0.5j * t), 0], [0, np.exp(0.5j * t)]], dtype=complex)
    if name == "p":
        return np.array([[1, 0], [0, np.exp(1j * params[0])]], dtype=complex)
    if name == "u3":
        return u3_matrix(*params)
    raise ValueError(f"{name!r} has no single-qubit matrix")


# ---------------------------------------------------------------------------
# Deterministic builders
# ---------------------------------------------------------------------------

def build_qft(n: int) -> Circuit:
    """Quantum Fourier transform on ``n`` qubits.

    For each qubit j from high to low: H on j, then a controlled phase of
    pi/2**k from qubit j-k onto j.  A final reversal layer of SWAPs makes the
    output index order agree with the classical DFT (positive exponent,
    1/sqrt(N) normalization) under the qubit-0-is-LSB convention.
    """
    if n < 1:
        raise ValueError("qft needs at least 1 qubit")
    gates = []
    for j in range(n - 1, -1, -1):
        gates.append(h(j))
        for k in range(1, j + 1):
            gates.append(cp(math.pi / (1 << k), j - k, j))
    for a in range(n // 2):
        gates.append(swap(a, n - 1 - a))
    return Circuit(n, tuple(gates))


def build_ghz(n: int) -> Circuit:
    """H on qubit 0 followed by a CX chain; |0..0> maps to the GHZ state."""
    if n < 1:
        raise ValueError("ghz needs at least 1 qubit")
    gates = [h(0)]
    for q in range(n - 1):
        gates.append(cx(q, q + 1))
    return Circuit(n, tuple(gates))


def grid_shape(width: int) -> tuple[int, int]:
    """Near-square grid (rows x cols) hosting ``width`` qubits row-major."""
    rows = max(1, int(math.isqrt(width)))
    cols = -(-width // rows)
    return rows, cols


def grid_edges(width: int, letter: str) -> list[tuple[int, int]]:
    """Nearest-neighbor grid edges selected by one layer letter.

    A/B are horizontal edges at even/odd column, C/D vertical edges at
    even/odd row; each letter is a matching, so its couplers commute.  Edges
    touching a position >= width (last partial row) are dropped.
    """
    rows, cols = grid_shape(width)
    edges = []
    if letter in ("A", "B"):
        start = 0 if letter == "A" else 1
        for r in range(rows):
            for c in range(start, cols - 1, 2):
                edges.append((r * cols + c, r * cols + c + 1))
    elif letter in ("C", "D"):
        start = 0 if letter == "C" else 1
        for r in range(start, rows - 1, 2):
            for c in range(cols):
                edges.append((r * cols + c, (r + 1) * cols + c))
    else:
        raise ValueError(f"unknown layer letter {letter!r}")
    return [(a, b) for a, b in edges if a < width and b < width]


_COUPLERS = (cx, cy, cz, ax, ay, az)


def build_random_circuit(width: int, depth: int, seed: int) -> Circuit:
    """Random brickwork circuit: per-layer U3 on every qubit, then grid couplers.

    Layer ``l`` couples the edges of letter ``LETTER_PATTERN[l % 8]`` with a
    coupler drawn uniformly from CX/CY/CZ/AX/AY/AZ in random orientation.
    Deterministic in (width, depth, seed); the stream is PCG64(seed) with
    draws in layer order: 3 angles per qubit, then (kind, orientation) per
    edge in row-major edge order.
    """
    if width < 2:
        raise ValueError("random circuit needs width >= 2")
    if depth < 1:
        raise ValueError("random circuit needs depth >= 1")
    rng = np.random.Generator(np.random.PCG64(seed))
    gates = []
    for layer in range(depth):
        for q in range(width):
            theta, phi, lam = rng.uniform(0.0, 2.0 * math.pi, 3)
            gates.append(u3(theta, phi, lam, q))
        letter = LETTER_PATTERN[layer % len(LETTER_PATTERN)]
        for a, b in grid_edges(width, letter):
            make = _COUPLERS[rng.integers(0, len(_COUPLERS))]
            if rng.integers(0, 2):
                a, b = b, a
            gates.append(make(a, b))
    return Circuit(width, tuple(gates))


# ---------------------------------------------------------------------------
# Text format
# ---------------------------------------------------------------------------

_CONTROLLED_MNEMONICS = {
    "cx": ("x", 1, 0), "cy": ("y", 1, 0), "cz": ("z", 1, 0),
    "ax": ("x", 0, 0), "ay": ("y", 0, 0), "az": ("z", 0, 0),
    "cp": ("p", 1, 1),
}


def parse_circuit(text: str) -> Circuit:
    """Parse the line-oriented circuit format (see serialize_circuit)."""
    width = None
    gates = []
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        tokens = line.split()
        if width is None:
            if tokens[0] != "qubits" or len(tokens) != 2:
                raise CircuitParseError(lineno, "expected 'qubits <n>' header")
            try:
                width = int(tokens[1])
            except ValueError:
                raise CircuitParseError(lineno, f"bad qubit count {tokens[1]!r}") from None
            if width < 1:
                raise CircuitParseError(lineno, "qubit count must be >= 1")
            continue
        try:
            gates.append(_parse_gate(tokens))
        except (ValueError, IndexError) as exc:
            raise CircuitParseError(lineno, str(exc)) from None
        for q in gates[-1].qubits:
            if q >= width:
                raise CircuitParseError(lineno, f"qubit {q} out of range (qubits {width})")
    if width is None:
        raise CircuitParseError(1, "missing 'qubits <n>' header")
    return Circuit(width, tuple(gates))


def _parse_gate(tokens: list[str]) -> Gate:
    name, args = tokens[0], tokens[1:]

    def qubit(tok: str) -> int:
        q = int(tok)
        if q < 0:
            raise ValueError(f"negative qubit index {q}")
        return q

    if name in ("h", "x", "y", "z", "m"):
        if len(args) != 1:
            raise ValueError(f"{name} takes 1 operand, got {len(args)}")
        return Gate(name, (qubit(args[0]),))
    if name in ("rz", "p"):
        if len(args) != 2:
            raise ValueError(f"{name} takes 2 operands, got {len(args)}")
        return Gate(name, (qubit(args[1]),), (float(args[0]),))
    if name == "u3":
        if len(args) != 4:
            raise ValueError(f"u3 takes 4 operands, got {len(args)}")
        return u3(float(args[0]), float(args[1]), float(args[2]), qubit(args[3]))
    if name == "swap":
        if len(args) != 2:
            raise ValueError(f"swap takes 2 operands, got {len(args)}")
        return swap(qubit(args[0]), qubit(args[1]))
    if name in _CONTROLLED_MNEMONICS:
        inner, pol, nparams = _CONTROLLED_MNEMONICS[name]
        if len(args) != 2 + nparams:
            raise ValueError(f"{name} takes {2 + nparams} operands, got {len(args)}")
        params = (float(args[0]),) if nparams else ()
        c, t = qubit(args[nparams]), qubit(args[nparams + 1])
        return Gate(inner, (t,), params, controls=(c,), polarity=(pol,))
    raise ValueError(f"unknown gate mnemonic {name!r}")


def serialize_circuit(circuit: Circuit) -> str:
    """Inverse of parse_circuit; round-trips exactly (angles via repr)."""
    lines = [f"qubits {circuit.width}"]
    for g in circuit.gates:
        lines.append(_serialize_gate(g))
    return "\n".join(lines) + "\n"


def _serialize_gate(g: Gate) -> str:
    if g.controls:
        if len(g.controls) != 1:
            raise ValueError("text format supports single-control gates only")
        c, t, pol = g.controls[0], g.targets[0], g.polarity[0]
        if g.name in ("x", "y", "z"):
            return f"{'c' if pol else 'a'}{g.name} {c} {t}"
        if g.name == "p" and pol == 1:
            return f"cp {g.params[0]!r} {c} {t}"
        raise ValueError(f"no mnemonic for controlled {g.name} with polarity {pol}")
    if g.name in ("h", "x", "y", "z", "m"):
        return f"{g.name} {g.targets[0]}"
    if g.name in ("rz", "p"):
        return f"{g.name} {g.params[0]!r} {g.targets[0]}"
    if g.name == "u3":
        t, p, l = g.params
        return f"u3 {t!r} {p!r} {l!r} {g.targets[0]}"
    if g.name == "swap":
        return f"swap {g.targets[0]} {g.targets[1]}"
    raise ValueError(f"cannot serialize gate {g.name!r}")
