"""Loss-threshold Monte Carlo for a GHZ-measurement-based photonic architecture.

The package is organised bottom-up:

  pauli       exact stabiliser-group algebra over GF(2)
  gf2         bit-packed GF(2) linear algebra backing the group operations
  encodings   parity-encoded 2-chain resource states and Bell outcome recovery
  lattice     measurement network geometry, check derivation, syndrome graphs
  montecarlo  erasure sampling, boundary-spanning detection, threshold scans
  cli         command-line front end
"""

__version__ = "0.1.0"

from .encodings import EncodingSpec, LossModel, ReturnProbabilities, parse_encoding
from .pauli import GeneratorSet, PauliOperator

__all__ = [
    "EncodingSpec",
    "GeneratorSet",
    "LossModel",
    "PauliOperator",
    "ReturnProbabilities",
    "parse_encoding",
    "__version__",
]
