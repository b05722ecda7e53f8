"""shardsim: a hybrid factorized simulator of gate-model quantum circuits.

The global state is kept as a tensor product of independent "shards", each
one either a dense statevector or a stabilizer tableau.  Gates are rewritten,
buffered or eliminated whenever doing so cannot change any observable, and an
optional Schmidt rounding parameter trades simulation fidelity for time and
memory in a controlled, estimable way.
"""

from .circuit import Circuit, Gate, build_ghz, build_qft, build_random_circuit
from .circuit import parse_circuit, serialize_circuit, u3_matrix, CircuitParseError
from .ket import BlochVector, DenseKet, epsilon_from_bloch
from .tableau import StabilizerShard, is_clifford
from .engine import EngineConfig, HybridState, MemoryBudgetError, OptFlags
from .validate import (
    MinSdrpResult,
    SweepRecord,
    dense_reference,
    dft_oracle,
    exact_fidelity,
    min_sdrp_search,
    rmse,
    sdrp_sweep,
)

__version__ = "0.1.0"
RNG_ALGORITHM = "pcg64"

__all__ = [
    "BlochVector",
    "Circuit",
    "CircuitParseError",
    "DenseKet",
    "EngineConfig",
    "Gate",
    "HybridState",
    "MemoryBudgetError",
    "MinSdrpResult",
    "OptFlags",
    "StabilizerShard",
    "SweepRecord",
    "build_ghz",
    "build_qft",
    "build_random_circuit",
    "dense_reference",
    "dft_oracle",
    "epsilon_from_bloch",
    "exact_fidelity",
    "is_clifford",
    "min_sdrp_search",
    "parse_circuit",
    "rmse",
    "sdrp_sweep",
    "serialize_circuit",
    "u3_matrix",
]
