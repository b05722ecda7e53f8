"""Reference oracles and validation harnesses.

Two independent routes back every checked quantity: the quantum Fourier
circuit is compared against a classical radix-2 transform (itself
cross-checked by the O(N^2) direct sum), and the hybrid engine's product
fidelity estimate is compared against the exact overlap with a plain dense
simulation.
"""

from __future__ import annotations

import math
import time
from dataclasses import dataclass

import numpy as np

from .circuit import Circuit, build_random_circuit, gate_matrix
from .engine import EngineConfig, HybridState, MemoryBudgetError
from .ket import DenseKet

DENSE_BUDGET = 1 << 26  # practical dense-simulation ceiling (amplitudes)
DEFAULT_P_STEP = 0.025


def default_p_grid() -> list[float]:
    """0, 0.025, ..., 1.0 (41 points)."""
    return [round(i * DEFAULT_P_STEP, 6) for i in range(41)]


def derive_seed(base_seed: int, *parts: int) -> int:
    """Stable 64-bit per-cell seed; order-independent work scheduling."""
    ss = np.random.SeedSequence([int(base_seed) & 0xFFFFFFFFFFFFFFFF, *[int(p) for p in parts]])
    return int(ss.generate_state(1, dtype=np.uint64)[0])


# ---------------------------------------------------------------------------
# Discrete Fourier transform oracle
# ---------------------------------------------------------------------------

def dft_oracle(x) -> np.ndarray:
    """Unitary DFT with positive exponent: y_j = sum_k x_k w^{jk} / sqrt(N).

    Radix-2 decimation-in-time (bit-reversal plus log2 N butterfly stages);
    ``dft_direct`` is the independent O(N^2) cross-check.
    """
    x = np.asarray(x, dtype=complex)
    n = x.size
    if n == 0 or n & (n - 1):
        raise ValueError(f"length must be a power of two, got {n}")
    bits = n.bit_length() - 1
    idx = np.arange(n)
    rev = np.zeros(n, dtype=np.intp)
    for b in range(bits):
        rev |= ((idx >> b) & 1) << (bits - 1 - b)
    y = x[rev]
    half = 1
    while half < n:
        tw = np.exp(2j * np.pi * np.arange(half) / (2 * half))
        blocks = y.reshape(-1, 2 * half)
        even = blocks[:, :half].copy()
        odd = blocks[:, half:] * tw
        blocks[:, :half] = even + odd
        blocks[:, half:] = even - odd
        half *= 2
    return y / math.sqrt(n)


def dft_direct(x) -> np.ndarray:
    """O(N^2) direct evaluation of the same transform (N <= 256)."""
    x = np.asarray(x, dtype=complex)
    n = x.size
    if n > 256:
        raise ValueError("direct summation cross-check is limited to N <= 256")
    jk = np.outer(np.arange(n), np.arange(n))
    return (np.exp(2j * np.pi * jk / n) @ x) / math.sqrt(n)


# ---------------------------------------------------------------------------
# Dense reference simulation
# ---------------------------------------------------------------------------

def dense_reference(c: Circuit, initial: DenseKet | None = None, rng=None) -> DenseKet:
    """Plain dense simulation of ``c``: no factorization, buffering,
    stabilizer path or rounding.  The gold-standard route."""
    if (1 << c.width) > DENSE_BUDGET:
        raise MemoryBudgetError(1 << c.width, DENSE_BUDGET)
    if initial is None:
        state = DenseKet(c.width)
    else:
        if initial.width != c.width:
            raise ValueError("initial state width mismatch")
        state = initial.copy()
    for g in c.gates:
        if g.name == "m":
            if rng is None:
                raise ValueError("circuit contains measurements; pass an rng")
            p1 = state.probability(g.targets[0], 1)
            outcome = 1 if rng.random() < p1 else 0
            state.project_and_renormalize(g.targets[0], outcome)
        elif g.name == "swap":
            a, b = g.targets
            state.apply_controlled((a,), (1,), b, gate_matrix("x"))
            state.apply_controlled((b,), (1,), a, gate_matrix("x"))
            state.apply_controlled((a,), (1,), b, gate_matrix("x"))
        elif g.controls:
            state.apply_controlled(g.controls, g.polarity, g.targets[0],
                                   gate_matrix(g.name, g.params))
        else:
            state.apply_1q(g.targets[0], gate_matrix(g.name, g.params))
    return state


def run_hybrid(c: Circuit, cfg: EngineConfig,
               initial: DenseKet | None = None) -> HybridState:
    """Build a simulator, optionally load an initial state, run the circuit."""
    sim = HybridState(c.width, cfg)
    if initial is not None:
        sim.load_state(initial)
    sim.apply_circuit(c)
    return sim


def exact_fidelity(c: Circuit, cfg: EngineConfig) -> tuple[float, float]:
    """(exact overlap fidelity, engine product estimate) for one circuit."""
    exact = dense_reference(c)
    sim = run_hybrid(c, cfg)
    return sim.full_ket().fidelity(exact), sim.estimated_fidelity()


def rmse(pairs) -> float:
    """Root-mean-square error between estimated and exact fidelities."""
    pairs = list(pairs)
    if not pairs:
        raise ValueError("rmse needs at least one (estimate, exact) pair")
    total = 0.0
    for est, exact in pairs:
        total += (est - exact) ** 2
    return math.sqrt(total / len(pairs))


# ---------------------------------------------------------------------------
# Sweeps
# ---------------------------------------------------------------------------

@dataclass
class SweepRecord:
    """One observation row of the fidelity-validation ensemble."""

    width: int
    depth: int
    seed: int
    p: float
    f_model: float | None
    f_exact: float | None
    wall_ms: int
    peak_amplitudes: int
    error: str | None = None

    def csv_row(self) -> str:
        fm = "" if self.f_model is None else f"{self.f_model:.12g}"
        fe = "" if self.f_exact is None else f"{self.f_exact:.12g}"
        return (f"{self.width},{self.depth},{self.seed},{self.p:.12g},"
                f"{fm},{fe},{self.wall_ms},{self.peak_amplitudes}")


SWEEP_CSV_HEADER = "width,depth,seed,p,f_model,f_exact,wall_ms,peak_amplitudes"


def _run_cell(width: int, depth: int, seed: int, p: float,
              mem_budget: int, exact: DenseKet | None) -> SweepRecord:
    c = build_random_circuit(width, depth, seed)
    cfg = EngineConfig(sdrp=p, mem_budget=mem_budget, rng_seed=seed)
    start = time.monotonic()
    try:
        sim = run_hybrid(c, cfg)
        sim.flush_all()  # deferred gates must fit the budget too
        f_model = sim.estimated_fidelity()
        f_exact = sim.full_ket().fidelity(exact) if exact is not None else None
        wall_ms = int((time.monotonic() - start) * 1000)
        return SweepRecord(width, depth, seed, p, f_model, f_exact,
                           wall_ms, sim.peak_amplitudes)
    except MemoryBudgetError as exc:
        wall_ms = int((time.monotonic() - start) * 1000)
        return SweepRecord(width, depth, seed, p, None, None, wall_ms,
                           exc.needed, error="mem_budget")


def sdrp_sweep(width: int, depth: int, n_circuits: int, p_grid=None,
               base_seed: int = 0, mem_budget: int = DENSE_BUDGET,
               with_exact: bool = True, threads: int = 1) -> list[SweepRecord]:
    """Random-circuit ensemble sweep over the rounding-parameter grid.

    Deterministic in base_seed: circuit i uses derive_seed(base_seed, i).
    The exact reference is simulated once per circuit and reused across the
    grid.  wall_ms and peak_amplitudes cover the hybrid run only.
    """
    grid = default_p_grid() if p_grid is None else list(p_grid)
    jobs = []
    for i in range(n_circuits):
        seed = derive_seed(base_seed, i)
        jobs.append((width, depth, seed))
    if threads > 1:
        return _sweep_parallel(jobs, grid, mem_budget, with_exact, threads)
    records = []
    for width_, depth_, seed in jobs:
        exact = None
        if with_exact:
            exact = dense_reference(build_random_circuit(width_, depth_, seed))
        for p in grid:
            records.append(_run_cell(width_, depth_, seed, p, mem_budget, exact))
    return records


def _sweep_worker(args):
    width, depth, seed, grid, mem_budget, with_exact = args
    exact = None
    if with_exact:
        exact = dense_reference(build_random_circuit(width, depth, seed))
    return [_run_cell(width, depth, seed, p, mem_budget, exact) for p in grid]


def _sweep_parallel(jobs, grid, mem_budget, with_exact, threads):
    from concurrent.futures import ProcessPoolExecutor

    args = [(w, d, s, grid, mem_budget, with_exact) for w, d, s in jobs]
    with ProcessPoolExecutor(max_workers=threads) as pool:
        chunks = list(pool.map(_sweep_worker, args))
    return [rec for chunk in chunks for rec in chunk]


# ---------------------------------------------------------------------------
# Minimum rounding-parameter search
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class MinSdrpResult:
    feasible: bool
    p_min: float | None
    f_model: float | None
    peak_amplitudes: int = 0


@dataclass
class HeatmapCell:
    """Ensemble mean fidelity estimate at one (p, depth) grid point."""

    p: float
    depth: int
    mean_f_model: float | None  # None when every run exceeded the budget
    completed: int
    failed: int


def sdrp_depth_heatmap(width: int, depths, p_grid, n_circuits: int,
                       base_seed: int, mem_budget: int) -> list[HeatmapCell]:
    """Fixed-p runs over a (p, depth) grid; out-of-memory runs are recorded
    as failures (the 'black regions') rather than searched around."""
    cells = []
    for depth in depths:
        circuits = [build_random_circuit(width, depth, derive_seed(base_seed, depth, i))
                    for i in range(n_circuits)]
        for p in p_grid:
            total, done, failed = 0.0, 0, 0
            for i, c in enumerate(circuits):
                cfg = EngineConfig(sdrp=p, mem_budget=mem_budget,
                                   rng_seed=derive_seed(base_seed, depth, i))
                try:
                    sim = run_hybrid(c, cfg)
                    sim.flush_all()
                    total += sim.estimated_fidelity()
                    done += 1
                except MemoryBudgetError:
                    failed += 1
            cells.append(HeatmapCell(p, depth, total / done if done else None,
                                     done, failed))
    return cells


def min_sdrp_search(width: int, depth: int, seed: int,
                    mem_budget: int, p_step: float = DEFAULT_P_STEP) -> MinSdrpResult:
    """Lower the rounding parameter from 1 in p_step decrements until the
    memory budget fails; report the last completing run."""
    if p_step <= 0:
        raise ValueError("p_step must be > 0")
    c = build_random_circuit(width, depth, seed)
    best: MinSdrpResult | None = None
    steps = int(round(1.0 / p_step))
    for i in range(steps, -1, -1):
        p = round(i * p_step, 9)
        cfg = EngineConfig(sdrp=p, mem_budget=mem_budget, rng_seed=seed)
        try:
            sim = run_hybrid(c, cfg)
            sim.flush_all()  # a run only counts if every deferred gate fits
        except MemoryBudgetError:
            return best if best is not None else MinSdrpResult(False, None, None)
        best = MinSdrpResult(True, p, sim.estimated_fidelity(), sim.peak_amplitudes)
        if p == 0.0:
            break
    return best
