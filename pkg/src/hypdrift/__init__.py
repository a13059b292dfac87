"""hypdrift: a numerical laboratory for random walks on hyperbolic group
actions — geometry kernels, orbit enumeration, Green functions, Gibbs
densities, and the entropy-drift-pressure inequality."""

__version__ = "0.1.0"

from ._estimate import Estimate
from ._kernels import BACKEND

__all__ = ["Estimate", "BACKEND", "__version__"]
