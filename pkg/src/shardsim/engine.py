"""Hybrid factorized simulator: a partition of qubits into stabilizer/dense shards.

Representation invariant: the global state equals, at every moment,

    (pending controlled ops, in arrival order) o (per-qubit 1q buffers)
        o (tensor product of committed shard states)

Every rewrite below preserves that state exactly (amplitudes included, not
just up to phase), so running with any subset of optimizations and sdrp = 0
reproduces the plain dense simulation.  The only non-unitary steps are
explicit measurements and Schmidt rounding, which records its branch weight
eps so the product fidelity estimate stays available.

Gate dispatch order: label swap, control elimination against Z-eigenstate
controls, 1q buffer absorption (commuting through pending controlled ops
where the conjugated op stays a controlled phase/inversion), controlled-op
buffering, and finally buffer flush + shard merge + kernel.  After every
committed entangling kernel the operand qubits are tested for exact
factorization and then, if enabled, for Schmidt rounding.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import ket as ketmod
from .circuit import Circuit, Gate, gate_matrix
from .ket import BlochVector, DenseKet, bloch_to_state, epsilon_from_bloch
from .tableau import StabilizerShard, match_clifford_1q, merge_tableaus

_ID2 = np.eye(2, dtype=complex)
_STRUCT_TOL = 1e-14
_PAULI_MATS = (("x", gate_matrix("x")), ("y", gate_matrix("y")), ("z", gate_matrix("z")))


class MemoryBudgetError(RuntimeError):
    """A merge/conversion would exceed the configured dense amplitude budget."""

    def __init__(self, needed: int, budget: int):
        super().__init__(f"needs {needed} dense amplitudes, budget is {budget}")
        self.needed = needed
        self.budget = budget


class InvariantError(RuntimeError):
    """Internal consistency violation (a bug, not a user error)."""


@dataclass(frozen=True)
class OptFlags:
    """Per-technique enable flags; every subset is observably equivalent."""

    control_elimination: bool = True
    hx_commutation: bool = True
    label_swap: bool = True
    pauli_coalescing: bool = True
    stabilizer_hybrid: bool = True

    @classmethod
    def none(cls) -> "OptFlags":
        return cls(False, False, False, False, False)


@dataclass(frozen=True)
class EngineConfig:
    sdrp: float = 0.0
    separability_tol: float = 1e-10
    mem_budget: int = 1 << 26
    rng_seed: int = 0
    optimizations: OptFlags = field(default_factory=OptFlags)

    def __post_init__(self):
        if not 0.0 <= self.sdrp <= 1.0:
            raise ValueError("sdrp must be in [0, 1]")
        if self.mem_budget < 2:
            raise ValueError("mem_budget must be >= 2")


class _CtrlOp:
    """A pending controlled phase/inversion gate, shared by its qubits' queues."""

    __slots__ = ("seq", "controls", "polarity", "target", "matrix")

    def __init__(self, seq, controls, polarity, target, matrix):
        self.seq = seq
        self.controls = controls    # list[_Qubit]
        self.polarity = polarity    # list[int]
        self.target = target        # _Qubit
        self.matrix = matrix        # 2x2 diagonal or antidiagonal unitary

    def qubits(self):
        return self.controls + [self.target]


class _Qubit:
    """Identity handle of one physical qubit; survives label swaps."""

    __slots__ = ("shard", "pos", "u1q", "pending")

    def __init__(self, shard, pos):
        self.shard = shard
        self.pos = pos
        self.u1q = None            # pending 2x2 unitary, None == identity
        self.pending: list[_CtrlOp] = []


class Shard:
    """One tensor factor: a stabilizer tableau or dense ket over its qubits."""

    __slots__ = ("kind", "state", "qubits")

    def __init__(self, kind, state, qubits):
        self.kind = kind           # "stab" | "dense"
        self.state = state
        self.qubits = qubits       # list[_Qubit], index == local position

    @property
    def width(self) -> int:
        return len(self.qubits)


def _is_diag(m) -> bool:
    return abs(m[0, 1]) < _STRUCT_TOL and abs(m[1, 0]) < _STRUCT_TOL


def _is_antidiag(m) -> bool:
    return abs(m[0, 0]) < _STRUCT_TOL and abs(m[1, 1]) < _STRUCT_TOL


def _snap_structure(m):
    """Zero the structurally-dead entries of a near-diag/antidiag matrix."""
    out = m.copy()
    if _is_diag(m):
        out[0, 1] = 0.0
        out[1, 0] = 0.0
        return out
    if _is_antidiag(m):
        out[0, 0] = 0.0
        out[1, 1] = 0.0
        return out
    return None


def _so3_rotation(u) -> np.ndarray:
    """SO(3) action of a 2x2 unitary on Bloch vectors: r' = R r."""
    r = np.empty((3, 3))
    for i, (_, pi) in enumerate(_PAULI_MATS):
        for j, (_, pj) in enumerate(_PAULI_MATS):
            r[i, j] = 0.5 * np.trace(pi @ u @ pj @ u.conj().T).real
    return r


def _match_pauli(m) -> tuple[str, complex] | None:
    """(pauli name, phase) with m == phase * pauli within 1e-12, else None."""
    for name, p in _PAULI_MATS:
        tr = np.trace(p @ m) / 2.0
        if abs(abs(tr) - 1.0) < 1e-12 and np.max(np.abs(m - tr * p)) < 1e-12:
            return name, complex(tr)
    return None


class HybridState:
    """The simulator state: shard set, buffers, rng and the eps record."""

    def __init__(self, n: int, cfg: EngineConfig | None = None):
        if n < 1:
            raise ValueError("simulator needs at least 1 qubit")
        self.n = n
        self.cfg = cfg if cfg is not None else EngineConfig()
        self.rng = np.random.Generator(np.random.PCG64(self.cfg.rng_seed))
        self.eps_record: list[float] = []
        self.dense_total = 0
        self.peak_amplitudes = 0
        self.stats = {"label_swaps": 0, "kernels": 0, "eliminated_controls": 0,
                      "merges": 0, "splits": 0}
        self._seq = 0
        self._handles: list[_Qubit] = []
        for q in range(n):
            self._handles.append(self._fresh_single_shard())

    # ------------------------------------------------------------------
    # Shard bookkeeping
    # ------------------------------------------------------------------

    def _fresh_single_shard(self, outcome: int = 0) -> _Qubit:
        if self.cfg.optimizations.stabilizer_hybrid:
            state = StabilizerShard(1)
            if outcome:
                state._x(0)
            shard = Shard("stab", state, [])
        else:
            amps = np.zeros(2, dtype=complex)
            amps[outcome] = 1.0
            self._charge_dense(2)
            shard = Shard("dense", DenseKet(1, amps), [])
        handle = _Qubit(shard, 0)
        shard.qubits = [handle]
        return handle

    def _charge_dense(self, amount: int, transient: int = 0) -> None:
        """Register ``amount`` new steady dense amplitudes (budget enforced);
        ``transient`` counts extra peak-only pressure during the operation."""
        needed = self.dense_total + amount + transient
        if needed > self.cfg.mem_budget:
            raise MemoryBudgetError(needed, self.cfg.mem_budget)
        self.dense_total += amount
        self.peak_amplitudes = max(self.peak_amplitudes, needed)

    def _release_dense(self, amount: int) -> None:
        self.dense_total -= amount
        if self.dense_total < 0:
            raise InvariantError("dense amplitude accounting went negative")

    def _to_dense(self, shard: Shard) -> None:
        """Convert a stabilizer shard to a dense one (exact, log replay)."""
        if shard.kind == "dense":
            return
        self._charge_dense(1 << shard.width)
        shard.kind = "dense"
        shard.state = shard.state.to_ket()

    def _merge_pair(self, a: Shard, b: Shard, stab_ok: bool) -> Shard:
        """Merge two shards; the wider one keeps its local positions."""
        if a.width < b.width:
            a, b = b, a
        self.stats["merges"] += 1
        if stab_ok and a.kind == "stab" and b.kind == "stab":
            merged = Shard("stab", merge_tableaus(a.state, b.state),
                           a.qubits + b.qubits)
        else:
            self._to_dense(a)
            self._to_dense(b)
            new_count = 1 << (a.width + b.width)
            # both factors stay alive while the product is built
            self._charge_dense(new_count)
            merged = Shard("dense", a.state.kron_compose(b.state), a.qubits + b.qubits)
            self._release_dense((1 << a.width) + (1 << b.width))
        for i, h in enumerate(merged.qubits):
            h.shard = merged
            h.pos = i
        return merged

    def _merge_for_gate(self, qubits: list[_Qubit], stab_ok: bool) -> Shard:
        shards = []
        for h in qubits:
            if h.shard not in shards:
                shards.append(h.shard)
        merged = shards[0]
        for other in shards[1:]:
            merged = self._merge_pair(merged, other, stab_ok)
        if not stab_ok:
            self._to_dense(merged)
        return merged

    def _split_dense(self, shard: Shard, pos: int, single: DenseKet, rest: DenseKet) -> None:
        """Replace ``shard`` by (rest, new single-qubit shard); exact bookkeeping."""
        handle = shard.qubits[pos]
        old = 1 << shard.width
        self.stats["splits"] += 1
        new_shard = Shard("dense", single, [handle])
        handle.shard = new_shard
        handle.pos = 0
        shard.qubits.pop(pos)
        for i, h in enumerate(shard.qubits):
            h.pos = i
        shard.state = rest
        # net change is negative; no budget check needed, peak unaffected
        self.dense_total += (2 + (1 << rest.width)) - old

    # ------------------------------------------------------------------
    # 1q buffer machinery
    # ------------------------------------------------------------------

    def _absorb_1q(self, h: _Qubit, m) -> None:
        if h.pending and not self._commute_past_pending(h, m):
            self._flush_pending(h)
        h.u1q = m if h.u1q is None else m @ h.u1q

    def _commute_past_pending(self, h: _Qubit, m) -> bool:
        """Try to rewrite every pending op of h so that m may join the 1q
        buffer (which applies before them); all-or-nothing."""
        plans = []
        for op in h.pending:
            if op.target is h:
                conj = _snap_structure(m @ op.matrix @ m.conj().T)
                if conj is None:
                    return False
                plans.append((op, "matrix", conj))
            elif _is_diag(m):
                plans.append((op, "keep", None))
            elif _is_antidiag(m):
                plans.append((op, "flip", None))
            else:
                return False
        for op, action, payload in plans:
            if action == "matrix":
                op.matrix = payload
            elif action == "flip":
                idx = op.controls.index(h)
                op.polarity[idx] ^= 1
        return True

    def _commit_1q_buffer(self, h: _Qubit) -> None:
        if h.u1q is None:
            return
        m = h.u1q
        h.u1q = None
        if np.max(np.abs(m - _ID2)) < 1e-12:
            return
        shard = h.shard
        if shard.kind == "stab":
            match = match_clifford_1q(m)
            if match is not None:
                word, phase = match
                shard.state.apply_1q_word(word, h.pos)
                shard.state.append_phase(phase)
                return
            self._to_dense(shard)
        shard.state.apply_1q(h.pos, m)
        self.stats["kernels"] += 1

    # ------------------------------------------------------------------
    # Pending controlled ops
    # ------------------------------------------------------------------

    def _buffer_ctrl(self, controls, target: _Qubit, m) -> None:
        """Append a controlled phase/inversion op; fuse with a tail op of the
        same signature (then a cancellation may remove both)."""
        ctrl_handles = [c for c, _ in controls]
        pol = [p for _, p in controls]
        tail = target.pending[-1] if target.pending else None
        if (tail is not None and tail.target is target
                and len(tail.controls) == len(ctrl_handles)
                and all(a is b for a, b in zip(tail.controls, ctrl_handles))
                and tail.polarity == pol
                and all(q.pending and q.pending[-1] is tail for q in tail.qubits())):
            fused = _snap_structure(m @ tail.matrix)
            if fused is None:
                raise InvariantError("fused controlled op left the buffered class")
            if np.max(np.abs(fused - _ID2)) < 1e-12:
                for q in tail.qubits():
                    q.pending.remove(tail)
            else:
                tail.matrix = fused
            return
        self._seq += 1
        op = _CtrlOp(self._seq, ctrl_handles, pol, target, m)
        for q in op.qubits():
            q.pending.append(op)

    def _flush_pending(self, h: _Qubit) -> None:
        while h.pending:
            self._commit_chain(h.pending[0])

    def _commit_chain(self, op: _CtrlOp) -> None:
        for q in op.qubits():
            while q.pending and q.pending[0] is not op:
                self._commit_chain(q.pending[0])
        for q in op.qubits():
            if not q.pending or q.pending[0] is not op:
                raise InvariantError("pending op queues lost chronological order")
            q.pending.pop(0)
        self._commit_ctrl_kernel(list(zip(op.controls, op.polarity)), op.target, op.matrix)

    def _commit_ctrl_kernel(self, controls, target: _Qubit, m) -> None:
        """Flush operand buffers, merge shards, apply the kernel, then try to
        factor/round each operand qubit."""
        qubits = [c for c, _ in controls] + [target]
        stab_ok = self._tableau_applicable(controls, m)
        if stab_ok:
            # only a Clifford 1q buffer may commit into a tableau; otherwise
            # the shard will convert to dense anyway
            stab_ok = all(h.shard.kind == "stab" and
                          (h.u1q is None or match_clifford_1q(h.u1q) is not None)
                          for h in qubits)
        for h in qubits:
            self._commit_1q_buffer(h)
        shard = self._merge_for_gate(qubits, stab_ok)
        if shard.kind == "stab":
            name, _ = _match_pauli(m) or ("id", None)
            gate = Gate(name, (target.pos,),
                        controls=tuple(c.pos for c, _ in controls),
                        polarity=tuple(p for _, p in controls)) if name != "id" else None
            if gate is not None:
                shard.state.apply_clifford(gate)
        else:
            shard.state.apply_controlled(tuple(c.pos for c, _ in controls),
                                         tuple(p for _, p in controls),
                                         target.pos, m)
            self.stats["kernels"] += 1
        for h in qubits:
            self._try_factor(h)

    def _tableau_applicable(self, controls, m) -> bool:
        if not self.cfg.optimizations.stabilizer_hybrid or len(controls) != 1:
            return False
        if np.max(np.abs(m - _ID2)) < 1e-12:
            return True
        return any(np.max(np.abs(m - p)) < 1e-12 for _, p in _PAULI_MATS)

    # ------------------------------------------------------------------
    # Control elimination
    # ------------------------------------------------------------------

    def _z_eigenstate(self, h: _Qubit) -> int | None:
        """0/1 when the qubit provably sits in that Z eigenstate, else None.

        Looks at the committed shard plus the qubit's own 1q buffer (rotated
        on the Bloch sphere); qubits with pending controlled ops are skipped.
        """
        if h.pending:
            return None
        shard = h.shard
        tol = self.cfg.separability_tol
        if shard.kind == "stab":
            det = shard.state.deterministic_eigen(h.pos)
            if det is None:
                return None
            basis, sign = det
            r0 = {"x": (sign, 0.0, 0.0), "y": (0.0, sign, 0.0), "z": (0.0, 0.0, sign)}[basis]
        else:
            if shard.width > 1:
                return None  # entangled-shard scan not worth the pass
            b = shard.state.bloch_vector(h.pos)
            if epsilon_from_bloch(b) > tol:
                return None
            r0 = (b.rx, b.ry, b.rz)
        if h.u1q is not None:
            r0 = tuple(_so3_rotation(h.u1q) @ np.asarray(r0))
        if r0[2] >= 1.0 - 2 * tol - 1e-12:
            return 0
        if r0[2] <= -1.0 + 2 * tol + 1e-12:
            return 1
        return None

    # ------------------------------------------------------------------
    # Factorization and Schmidt rounding
    # ------------------------------------------------------------------

    def _try_factor(self, h: _Qubit) -> None:
        shard = h.shard
        if shard.kind == "stab":
            if self.cfg.sdrp >= 1.0 - 1e-12 and shard.width > 1:
                if shard.state.deterministic_eigen(h.pos) is None:
                    # maximally mixed reduced state: eps = 0.5 <= p/2
                    shard.state.measure(h.pos, self.rng, forced=0)
                    self.eps_record.append(0.5)
            return
        if shard.width < 2:
            return
        r = shard.state.bloch_vector(h.pos)
        eps = epsilon_from_bloch(r)
        if eps <= self.cfg.separability_tol:
            res = shard.state.try_decompose(h.pos, self.cfg.separability_tol)
            if res is not None:
                single, rest = res
                self._split_dense(shard, h.pos, single, rest)
            return
        if self.cfg.sdrp > 0.0 and eps <= self.cfg.sdrp / 2.0:
            self._round_qubit(shard, h.pos, r, eps)

    def _round_qubit(self, shard: Shard, pos: int, r: BlochVector, eps: float) -> float | None:
        """Project qubit ``pos`` onto the dominant Schmidt branch (in place)."""
        length = r.length()
        if length < 1e-12:
            u = None  # maximally mixed: any axis works, use identity rotation
            phi = np.array([1.0, 0.0], dtype=complex)
        else:
            phi = bloch_to_state(r)
            u = np.array([[np.conj(phi[0]), np.conj(phi[1])],
                          [-phi[1], phi[0]]], dtype=complex)
        state = shard.state
        if u is not None:
            state._apply_1q_unchecked(pos, u)
        if state.probability(pos, 0) < 1e-12:
            if u is not None:  # numerically degenerate: undo and skip
                state._apply_1q_unchecked(pos, u.conj().T)
            return None
        state.project_and_renormalize(pos, 0)
        rest = state.remove_qubit(pos)
        single = DenseKet(1, phi)
        self._split_dense(shard, pos, single, rest)
        if eps > self.cfg.separability_tol:
            self.eps_record.append(eps)
            return eps
        return None

    def sdrp_round(self, q: int, p: float | None = None) -> float | None:
        """Attempt Schmidt rounding of qubit ``q`` at threshold ``p``.

        Returns the recorded branch weight eps when a lossy projection was
        applied, None when the state was left unchanged or split exactly.
        """
        p = self.cfg.sdrp if p is None else p
        h = self._handles[q]
        self._flush_pending(h)
        self._commit_1q_buffer(h)
        shard = h.shard
        if shard.kind == "stab" or shard.width < 2:
            raise ValueError("sdrp_round needs a dense shard of width >= 2")
        r = shard.state.bloch_vector(h.pos)
        eps = epsilon_from_bloch(r)
        if eps <= self.cfg.separability_tol:
            res = shard.state.try_decompose(h.pos, self.cfg.separability_tol)
            if res is not None:
                self._split_dense(shard, h.pos, *res)
            return None
        if eps > p / 2.0:
            return None
        return self._round_qubit(shard, h.pos, r, eps)

    # ------------------------------------------------------------------
    # Gate dispatch
    # ------------------------------------------------------------------

    def apply_gate(self, g: Gate) -> None:
        for q in g.qubits:
            if not 0 <= q < self.n:
                raise IndexError(f"qubit {q} out of range for {self.n}-qubit simulator")
        if g.name == "m":
            self._measure_qubit(g.targets[0])
            return
        if g.name == "swap":
            a, b = g.targets
            if self.cfg.optimizations.label_swap:
                self._handles[a], self._handles[b] = self._handles[b], self._handles[a]
                self.stats["label_swaps"] += 1
            else:
                for gate in (Gate("x", (b,), controls=(a,), polarity=(1,)),
                             Gate("x", (a,), controls=(b,), polarity=(1,)),
                             Gate("x", (b,), controls=(a,), polarity=(1,))):
                    self.apply_gate(gate)
            return
        if g.controls:
            m = gate_matrix(g.name, g.params)
            controls = [(self._handles[c], pol) for c, pol in zip(g.controls, g.polarity)]
            target = self._handles[g.targets[0]]
            if self.cfg.optimizations.control_elimination:
                remaining = []
                for hq, pol in controls:
                    state = self._z_eigenstate(hq)
                    if state is None:
                        remaining.append((hq, pol))
                    elif state == pol:
                        self.stats["eliminated_controls"] += 1
                    else:
                        return  # a control can never fire: drop the gate
                controls = remaining
            if not controls:
                self._absorb_1q(target, m)
                return
            snapped = _snap_structure(m)
            if self.cfg.optimizations.hx_commutation and snapped is not None:
                self._buffer_ctrl(controls, target, snapped)
                return
            for hq, _ in controls:
                self._flush_pending(hq)
            self._flush_pending(target)
            self._commit_ctrl_kernel(controls, target, m)
            return
        self._absorb_1q(self._handles[g.targets[0]], gate_matrix(g.name, g.params))

    def apply_circuit(self, c: Circuit) -> None:
        if c.width > self.n:
            raise ValueError(f"circuit width {c.width} exceeds simulator width {self.n}")
        for g in c.gates:
            self.apply_gate(g)

    # ------------------------------------------------------------------
    # Measurement and sampling
    # ------------------------------------------------------------------

    def _measure_qubit(self, q: int) -> int:
        h = self._handles[q]
        self._flush_pending(h)
        self._commit_1q_buffer(h)
        shard = h.shard
        if shard.kind == "stab":
            return shard.state.measure(h.pos, self.rng)
        p1 = shard.state.probability(h.pos, 1)
        outcome = 1 if self.rng.random() < p1 else 0
        shard.state.project_and_renormalize(h.pos, outcome)
        if shard.width > 1:
            rest = shard.state.remove_qubit(h.pos) if outcome == 0 else None
            if rest is None:
                shard.state._apply_1q_unchecked(h.pos, gate_matrix("x"))
                rest = shard.state.remove_qubit(h.pos)
                single = DenseKet(1, np.array([0, 1], dtype=complex))
            else:
                single = DenseKet(1, np.array([1, 0], dtype=complex))
            self._split_dense(shard, h.pos, single, rest)
        return outcome

    def measure_all(self, rng=None) -> str:
        """Measure every qubit, collapsing the state; bit i of the returned
        string (leftmost = qubit 0) is qubit i's outcome."""
        rng = self.rng if rng is None else rng
        self.flush_all()
        outcomes: dict[int, int] = {}
        done: set[int] = set()
        for label in range(self.n):
            h = self._handles[label]
            if id(h.shard) in done:
                continue
            done.add(id(h.shard))
            shard = h.shard
            if shard.kind == "stab":
                for pos, qb in enumerate(shard.qubits):
                    outcomes[id(qb)] = shard.state.measure(pos, rng)
            else:
                probs = np.abs(shard.state.amps) ** 2
                probs /= probs.sum()
                idx = int(rng.choice(probs.size, p=probs))
                members = list(shard.qubits)
                self._release_dense(1 << shard.width)  # before charging singles
                shard.state = None
                for pos, qb in enumerate(members):
                    bit = (idx >> pos) & 1
                    outcomes[id(qb)] = bit
                    fresh = self._fresh_single_shard(bit)
                    qb.shard = fresh.shard
                    qb.pos = 0
                    fresh.shard.qubits = [qb]
        return "".join(str(outcomes[id(self._handles[q])]) for q in range(self.n))

    def sample(self, shots: int, rng=None) -> list[str]:
        """Draw ``shots`` measurement outcomes without collapsing the state."""
        rng = self.rng if rng is None else rng
        self.flush_all()
        columns: list[tuple[_Qubit, list[int]]] = []
        done: set[int] = set()
        for label in range(self.n):
            shard = self._handles[label].shard
            if id(shard) in done:
                continue
            done.add(id(shard))
            if shard.kind == "stab":
                per_qubit: list[list[int]] = [[] for _ in shard.qubits]
                for _ in range(shots):
                    t = shard.state.copy()
                    for pos in range(shard.width):
                        per_qubit[pos].append(t.measure(pos, rng))
                for pos, qb in enumerate(shard.qubits):
                    columns.append((qb, per_qubit[pos]))
            else:
                probs = np.abs(shard.state.amps) ** 2
                probs /= probs.sum()
                draws = rng.choice(probs.size, size=shots, p=probs)
                for pos, qb in enumerate(shard.qubits):
                    columns.append((qb, list((draws >> pos) & 1)))
        by_handle = {id(qb): bits for qb, bits in columns}
        out = []
        for s in range(shots):
            out.append("".join(str(by_handle[id(self._handles[q])][s]) for q in range(self.n)))
        return out

    # ------------------------------------------------------------------
    # Observables
    # ------------------------------------------------------------------

    def flush_buffers(self, q: int) -> None:
        """Commit qubit q's pending controlled ops and 1q buffer."""
        h = self._handles[q]
        self._flush_pending(h)
        self._commit_1q_buffer(h)

    def flush_all(self) -> None:
        ops: dict[int, _CtrlOp] = {}
        for h in self._handles:
            for op in h.pending:
                ops[op.seq] = op
        for seq in sorted(ops):
            op = ops[seq]
            if op.target.pending and op in op.target.pending:
                self._commit_chain(op)
        if self.cfg.optimizations.pauli_coalescing:
            self._coalesced_flush()
        for h in self._handles:
            self._commit_1q_buffer(h)

    def _coalesced_flush(self) -> None:
        """Commit pure-Pauli 1q buffers of each dense shard in one traversal."""
        done: set[int] = set()
        for h in self._handles:
            shard = h.shard
            if id(shard) in done or shard.kind != "dense":
                continue
            done.add(id(shard))
            layer = []
            scale = 1.0 + 0.0j
            for qb in shard.qubits:
                if qb.u1q is None:
                    continue
                hit = _match_pauli(qb.u1q)
                if hit is None:
                    continue
                name, ph = hit
                layer.append((qb.pos, name))
                scale *= ph
                qb.u1q = None
            if len(layer) >= 2:
                shard.state.apply_pauli_layer(layer)
                if abs(scale - 1.0) > 1e-15:
                    shard.state.amps *= scale
                self.stats["kernels"] += 1
            elif layer:
                name = layer[0][1]
                shard.state._apply_1q_unchecked(layer[0][0], scale * gate_matrix(name))
                self.stats["kernels"] += 1

    def estimated_fidelity(self) -> float:
        total = 1.0
        for eps in self.eps_record:
            total *= 1.0 - eps
        return total

    def _shard_ket(self, shard: Shard) -> DenseKet:
        if shard.kind == "dense":
            return shard.state
        if shard.width > 28:
            raise MemoryBudgetError(1 << shard.width, self.cfg.mem_budget)
        return shard.state.to_ket()

    def get_amplitude(self, bits: str) -> complex:
        """Amplitude of one basis state; bits[i] is qubit i (no full-ket build)."""
        if len(bits) != self.n:
            raise ValueError(f"need {self.n} bits, got {len(bits)}")
        self.flush_all()
        label_of = {id(h): l for l, h in enumerate(self._handles)}
        done: set[int] = set()
        total = 1.0 + 0.0j
        for label in range(self.n):
            shard = self._handles[label].shard
            if id(shard) in done:
                continue
            done.add(id(shard))
            idx = 0
            for pos, qb in enumerate(shard.qubits):
                if bits[label_of[id(qb)]] == "1":
                    idx |= 1 << pos
            total *= self._shard_ket(shard).amplitude(idx)
        return total

    def full_ket(self) -> DenseKet:
        """Materialize the global state, globally label-ordered."""
        if (1 << self.n) > self.cfg.mem_budget:
            raise MemoryBudgetError(1 << self.n, self.cfg.mem_budget)
        self.flush_all()
        combined: DenseKet | None = None
        order: list[int] = []
        done: set[int] = set()
        label_of = {id(h): l for l, h in enumerate(self._handles)}
        for label in range(self.n):
            shard = self._handles[label].shard
            if id(shard) in done:
                continue
            done.add(id(shard))
            piece = self._shard_ket(shard)
            combined = piece if combined is None else combined.kron_compose(piece)
            order.extend(label_of[id(qb)] for qb in shard.qubits)
        inverse = [0] * self.n
        for pos, lab in enumerate(order):
            inverse[lab] = pos
        return ketmod.permute_qubits(combined, inverse)

    def load_state(self, state: DenseKet) -> None:
        """Replace the whole state with one dense shard (label i = bit i)."""
        if state.width != self.n:
            raise ValueError(f"state width {state.width} != simulator width {self.n}")
        for h in self._handles:
            h.pending.clear()
            h.u1q = None
        freed = sum((1 << s.width) for s in {id(h.shard): h.shard
                                             for h in self._handles}.values()
                    if s.kind == "dense")
        self._release_dense(freed)
        self._charge_dense(1 << state.width)
        shard = Shard("dense", state.copy(), [])
        for label, h in enumerate(self._handles):
            h.shard = shard
            h.pos = label
        shard.qubits = list(self._handles)


def new_simulator(n: int, cfg: EngineConfig | None = None) -> HybridState:
    return HybridState(n, cfg)
