"""Why factorization matters: Fourier circuits on easy and hard inputs.
=====================================================================

On |0..0> every controlled phase in the Fourier circuit has its control in a
Z eigenstate, so the engine deletes them all and never allocates a dense
amplitude array.  Seeding the circuit with a GHZ state instead forces a full
2^n-amplitude shard and the classic exponential wall reappears.
"""

import time

from shardsim import EngineConfig, HybridState, build_ghz, build_qft

print("zero input (stays factorized):")
for n in (8, 16, 24, 30):
    sim = HybridState(n, EngineConfig())
    t0 = time.perf_counter()
    sim.apply_circuit(build_qft(n))
    sim.flush_all()
    ms = (time.perf_counter() - t0) * 1e3
    print(f"  n={n:3d}  {ms:8.2f} ms   peak dense amplitudes: {sim.peak_amplitudes}")

print("\nGHZ input (maximally entangled, worst case):")
for n in (12, 14, 16, 18):
    sim = HybridState(n, EngineConfig())
    sim.apply_circuit(build_ghz(n))
    t0 = time.perf_counter()
    sim.apply_circuit(build_qft(n))
    sim.flush_all()
    ms = (time.perf_counter() - t0) * 1e3
    print(f"  n={n:3d}  {ms:8.2f} ms   peak dense amplitudes: {sim.peak_amplitudes}")

print("\nThe zero-input rows grow linearly; the GHZ rows double per qubit.")
