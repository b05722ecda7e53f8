"""Command-line front end: benchmark, validation and ad-hoc simulation runs.

Subcommands
    qft-bench   wall-clock scaling of Fourier circuits (zero or GHZ input)
    validate    random-circuit fidelity-model calibration sweep (RMSE table)
    min-sdrp    minimum-rounding-parameter search series or p/depth heat map
    run         simulate a circuit file

Exit codes: 0 ok, 2 usage, 3 input parse, 4 memory budget exceeded,
5 internal invariant violation.  CSV files are the authoritative output;
SVG plots are optional renderings and their failure never blocks the CSV.
"""

from __future__ import annotations

import argparse
import statistics
import sys
import time
from dataclasses import dataclass, field

import numpy as np

from . import __version__, RNG_ALGORITHM
from .circuit import build_ghz, build_qft, parse_circuit, CircuitParseError
from .engine import EngineConfig, HybridState, InvariantError, MemoryBudgetError
from .svgplot import heat_map, line_plot
from .validate import (
    DENSE_BUDGET,
    SWEEP_CSV_HEADER,
    derive_seed,
    dft_oracle,
    min_sdrp_search,
    rmse,
    sdrp_depth_heatmap,
    sdrp_sweep,
)

ORACLE_BUDGET = 1 << 22  # amplitudes; above this the DFT check is skipped


@dataclass
class BenchReport:
    """Rows plus the environment stamp they were collected under."""

    experiment: str
    axes: dict
    header: str
    rows: list[str] = field(default_factory=list)
    notes: list[str] = field(default_factory=list)

    def stamp(self, seed: int, threads: int) -> list[str]:
        return [f"# engine=shardsim {__version__}, rng={RNG_ALGORITHM}, "
                f"threads={threads}, seed={seed}",
                f"# experiment={self.experiment} "
                + " ".join(f"{k}={v}" for k, v in self.axes.items())]

    def write_csv(self, path: str, seed: int, threads: int) -> None:
        lines = self.stamp(seed, threads) + [self.header] + self.rows
        with open(path, "w", encoding="utf-8") as fh:
            fh.write("\n".join(lines) + "\n")


def _emit_plot(path: str, svg: str) -> None:
    try:
        with open(path, "w", encoding="utf-8") as fh:
            fh.write(svg)
    except OSError as exc:  # the CSV is already safely on disk
        print(f"warning: plot emission failed: {exc}", file=sys.stderr)


# ---------------------------------------------------------------------------
# qft-bench
# ---------------------------------------------------------------------------

def cmd_qft_bench(args) -> int:
    report = BenchReport("qft-bench",
                         {"n_min": args.n_min, "n_max": args.n_max,
                          "init": args.init, "repeats": args.repeats},
                         "n,init,wall_ms,peak_amplitudes,verified")
    series = []
    for n in range(args.n_min, args.n_max + 1):
        qft = build_qft(n)
        prep = build_ghz(n) if args.init == "ghz" else None
        times = []
        sim = None
        for rep in range(args.repeats + 1):  # first run is a discarded warm-up
            sim = HybridState(n, EngineConfig(mem_budget=args.mem_budget,
                                              rng_seed=args.seed))
            if prep is not None:
                sim.apply_circuit(prep)
            t0 = time.monotonic()
            sim.apply_circuit(qft)
            sim.flush_all()
            dt = time.monotonic() - t0
            if rep > 0:
                times.append(dt)
        wall_ms = int(statistics.median(times) * 1000)
        verified = ""
        if (1 << n) <= min(ORACLE_BUDGET, args.mem_budget):
            x = np.zeros(1 << n, dtype=complex)
            if args.init == "ghz":
                x[0] = x[-1] = 1 / np.sqrt(2)
            else:
                x[0] = 1.0
            diff = np.max(np.abs(sim.full_ket().amps - dft_oracle(x)))
            verified = "1" if diff < 1e-9 else "0"
            if verified == "0":
                report.notes.append(f"n={n}: oracle mismatch {diff:.3e}")
        report.rows.append(f"{n},{args.init},{wall_ms},{sim.peak_amplitudes},{verified}")
        series.append((n, max(wall_ms, 1)))
        print(f"n={n:3d} init={args.init} wall_ms={wall_ms} "
              f"peak={sim.peak_amplitudes} verified={verified or '-'}")
    report.write_csv(args.out, args.seed, 1)
    if args.format == "csv+svg":
        _emit_plot(args.out + ".svg",
                   line_plot({f"qft ({args.init} input)": [(n, t) for n, t in series]},
                             "Fourier circuit wall time", "qubits", "wall ms (log)",
                             log_y=True))
    if report.notes:
        for note in report.notes:
            print(f"error: verification: {note}", file=sys.stderr)
        return 5
    return 0


# ---------------------------------------------------------------------------
# validate
# ---------------------------------------------------------------------------

def _parse_grid(text: str) -> list[tuple[int, int]]:
    cells = []
    for part in text.split(","):
        w, _, d = part.strip().partition("x")
        cells.append((int(w), int(d)))
    return cells


def cmd_validate(args) -> int:
    cells = _parse_grid(args.grid)
    report = BenchReport("validate",
                         {"grid": args.grid, "circuits": args.circuits},
                         SWEEP_CSV_HEADER)
    table = []
    all_pairs = []
    for width, depth in cells:
        base = derive_seed(args.seed, width, depth)
        recs = sdrp_sweep(width, depth, args.circuits, base_seed=base,
                          mem_budget=args.mem_budget, threads=args.threads)
        report.rows.extend(r.csv_row() for r in recs)
        pairs = [(r.f_model, r.f_exact) for r in recs
                 if r.f_model is not None and r.f_exact is not None]
        cell_rmse = rmse(pairs)
        all_pairs.extend(pairs)
        table.append((width, depth, cell_rmse))
        print(f"{width:3d} x {depth:<3d} circuits={args.circuits} rmse={cell_rmse:.4f}")
    overall = rmse(all_pairs)
    print(f"Overall rmse={overall:.4f}")
    report.write_csv(args.out, args.seed, args.threads)
    summary = BenchReport("validate-rmse", {"grid": args.grid},
                          "width,depth,circuits,rmse")
    summary.rows = [f"{w},{d},{args.circuits},{r:.6f}" for w, d, r in table]
    summary.rows.append(f"overall,,{args.circuits * len(cells)},{overall:.6f}")
    summary.write_csv(_sibling(args.out, "_rmse"), args.seed, args.threads)
    return 0


def _sibling(path: str, suffix: str) -> str:
    stem, dot, ext = path.rpartition(".")
    return f"{stem}{suffix}.{ext}" if dot else f"{path}{suffix}"


# ---------------------------------------------------------------------------
# min-sdrp
# ---------------------------------------------------------------------------

def _parse_span(text: str) -> list[int]:
    if ":" in text:
        lo, _, hi = text.partition(":")
        return list(range(int(lo), int(hi) + 1))
    return [int(p) for p in text.split(",")]


def cmd_min_sdrp(args) -> int:
    if args.width >= 54 and not args.i_have_80gb:
        print("error: usage: width >= 54 needs tens of GB of amplitude storage; "
              "pass --i-have-80gb to acknowledge", file=sys.stderr)
        return 2
    depths = _parse_span(args.depths)
    if args.heatmap:
        p_grid = [round(p, 6) for p in np.arange(0.1, 1.0 + 1e-9, 0.1)]
        cells = sdrp_depth_heatmap(args.width, depths, p_grid, args.circuits,
                                   args.seed, args.mem_budget)
        report = BenchReport("min-sdrp-heatmap",
                             {"width": args.width, "circuits": args.circuits},
                             "p,depth,mean_f_model,completed,failed")
        values = {}
        for c in cells:
            mean = "" if c.mean_f_model is None else f"{c.mean_f_model:.12g}"
            report.rows.append(f"{c.p:.12g},{c.depth},{mean},{c.completed},{c.failed}")
            values[(c.p, float(c.depth))] = c.mean_f_model
        report.write_csv(args.out, args.seed, 1)
        if args.format == "csv+svg":
            _emit_plot(args.out + ".svg",
                       heat_map(p_grid, [float(d) for d in depths], values,
                                f"mean estimated fidelity, width {args.width}",
                                "rounding parameter", "layers"))
        return 0
    report = BenchReport("min-sdrp",
                         {"width": args.width, "circuits": args.circuits,
                          "mem_budget": args.mem_budget},
                         "width,depth,seed,p_min,f_model,peak_amplitudes")
    means = []
    for depth in depths:
        values = []
        for i in range(args.circuits):
            seed = derive_seed(args.seed, i)
            res = min_sdrp_search(args.width, depth, seed, args.mem_budget)
            if not res.feasible:
                report.rows.append(f"{args.width},{depth},{seed},,,")
                continue
            report.rows.append(f"{args.width},{depth},{seed},{res.p_min:.12g},"
                               f"{res.f_model:.12g},{res.peak_amplitudes}")
            values.append(res.f_model)
        mean = sum(values) / len(values) if values else None
        means.append((depth, mean))
        shown = "infeasible" if mean is None else f"{mean:.4f}"
        print(f"depth={depth:3d} circuits={len(values)} mean_f_model={shown}")
    report.write_csv(args.out, args.seed, 1)
    if args.format == "csv+svg":
        pts = [(float(d), m) for d, m in means if m is not None]
        _emit_plot(args.out + ".svg",
                   line_plot({f"width {args.width}": pts},
                             "achievable fidelity vs depth", "layers",
                             "mean estimated fidelity"))
    return 0


# ---------------------------------------------------------------------------
# run
# ---------------------------------------------------------------------------

def cmd_run(args) -> int:
    try:
        with open(args.circuit, "r", encoding="utf-8") as fh:
            circuit = parse_circuit(fh.read())
    except FileNotFoundError:
        print(f"error: input: no such file: {args.circuit}", file=sys.stderr)
        return 3
    except CircuitParseError as exc:
        print(f"error: parse: {args.circuit}: {exc}", file=sys.stderr)
        return 3
    cfg = EngineConfig(sdrp=args.sdrp, mem_budget=args.mem_budget,
                       rng_seed=args.seed)
    t0 = time.monotonic()
    sim = HybridState(circuit.width, cfg)
    sim.apply_circuit(circuit)
    sim.flush_all()
    wall_ms = int((time.monotonic() - t0) * 1000)
    print(f"qubits: {circuit.width}")
    print(f"gates: {len(circuit)}")
    print(f"estimated fidelity: {sim.estimated_fidelity():.6f}")
    print(f"peak amplitudes: {sim.peak_amplitudes}")
    print(f"wall ms: {wall_ms}")
    if args.shots:
        for bits in sim.sample(args.shots):
            print(bits)
    if args.dump_state:
        ket = sim.full_ket()
        with open(args.dump_state, "w", encoding="utf-8") as fh:
            for idx, amp in enumerate(ket.amps):
                fh.write(f"{idx} {float(amp.real)!r} {float(amp.imag)!r}\n")
        print(f"state dumped: {args.dump_state}")
    return 0


# ---------------------------------------------------------------------------
# Parser and entry point
# ---------------------------------------------------------------------------

def _add_common(p, out_default: str) -> None:
    p.add_argument("--seed", type=int, default=0, help="base 64-bit seed")
    p.add_argument("--threads", type=int, default=1, help="worker processes")
    p.add_argument("--mem-budget", type=int, default=DENSE_BUDGET,
                   help="max dense amplitudes per simulator")
    p.add_argument("--out", default=out_default, help="output CSV path")
    p.add_argument("--format", choices=("csv", "csv+svg"), default="csv")


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="shardsim",
                                 description="hybrid factorized quantum circuit simulator")
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("qft-bench", help="Fourier-circuit timing benchmark")
    p.add_argument("--n-min", type=int, default=4)
    p.add_argument("--n-max", type=int, default=20)
    p.add_argument("--init", choices=("zero", "ghz"), default="zero")
    p.add_argument("--repeats", type=int, default=5)
    _add_common(p, "qft_bench.csv")
    p.set_defaults(func=cmd_qft_bench)

    p = sub.add_parser("validate", help="fidelity-model calibration sweep")
    p.add_argument("--grid", default="6x6,12x6,12x12,15x15",
                   help="comma-separated width x depth cells")
    p.add_argument("--circuits", type=int, default=100)
    _add_common(p, "validate.csv")
    p.set_defaults(func=cmd_validate)

    p = sub.add_parser("min-sdrp", help="minimum rounding parameter search")
    p.add_argument("--width", type=int, default=16)
    p.add_argument("--depths", default="1:10", help="lo:hi or comma list")
    p.add_argument("--circuits", type=int, default=100)
    p.add_argument("--heatmap", action="store_true",
                   help="fixed p x depth cross-section instead of the search")
    p.add_argument("--i-have-80gb", action="store_true",
                   help="acknowledge the memory cost of width >= 54")
    _add_common(p, "min_sdrp.csv")
    p.set_defaults(func=cmd_min_sdrp)

    p = sub.add_parser("run", help="simulate a circuit file")
    p.add_argument("circuit", help="path to circuit text file")
    p.add_argument("--sdrp", type=float, default=0.0)
    p.add_argument("--shots", type=int, default=0)
    p.add_argument("--dump-state", default=None,
                   help="write index/re/im triples of the final ket")
    _add_common(p, "run.csv")
    p.set_defaults(func=cmd_run)
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except MemoryBudgetError as exc:
        print(f"error: budget: {exc}", file=sys.stderr)
        return 4
    except CircuitParseError as exc:
        print(f"error: parse: {exc}", file=sys.stderr)
        return 3
    except (InvariantError, Exception) as exc:  # noqa: BLE001
        print(f"error: internal: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 5


if __name__ == "__main__":
    sys.exit(main())
