"""Schmidt rounding, step by step.
================================

Build a state with a known entanglement weight eps between one qubit and the
rest, then watch the rounding primitive project it onto the dominant Schmidt
branch: the overlap with the original state is exactly 1 - eps, and exactly
that eps lands in the engine's fidelity record.
"""

import math

import numpy as np

from shardsim import EngineConfig, HybridState
from shardsim.ket import DenseKet

rng = np.random.default_rng(7)


def weighted_pair(eps, rest_width=3):
    """sqrt(1-eps)|phi>|a> + sqrt(eps)|phi_perp>|b> with <a|b> = 0."""
    a = rng.normal(size=1 << rest_width) + 1j * rng.normal(size=1 << rest_width)
    a /= np.linalg.norm(a)
    b = rng.normal(size=1 << rest_width) + 1j * rng.normal(size=1 << rest_width)
    b -= np.vdot(a, b) * a
    b /= np.linalg.norm(b)
    phi = rng.normal(size=2) + 1j * rng.normal(size=2)
    phi /= np.linalg.norm(phi)
    perp = np.array([-np.conj(phi[1]), np.conj(phi[0])])
    return math.sqrt(1 - eps) * np.kron(a, phi) + math.sqrt(eps) * np.kron(b, perp)


for eps in (0.001, 0.05, 0.25, 0.5):
    sim = HybridState(4, EngineConfig(sdrp=1.0))
    sim.load_state(DenseKet.from_amplitudes(weighted_pair(eps)))
    before = sim.full_ket()
    recorded = sim.sdrp_round(0, p=1.0)
    overlap = before.fidelity(sim.full_ket())
    print(f"eps={eps:<6} recorded={recorded:.6f} overlap={overlap:.6f} "
          f"estimate={sim.estimated_fidelity():.6f}")

print("\nBelow threshold nothing happens:")
sim = HybridState(4, EngineConfig())
sim.load_state(DenseKet.from_amplitudes(weighted_pair(0.4)))
print("  sdrp_round(p=0.5) ->", sim.sdrp_round(0, p=0.5), "(eps=0.4 > p/2)")
