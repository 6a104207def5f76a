"""Multi-material topology optimization of pressure-driven compliant mechanisms.

Designs soft pneumatic grippers and fingers on structured voxel grids: a
porous-flow model locates the pressure boundary implicitly, linear-elastic
FEM predicts deformation, adjoint sensitivities feed a moving-asymptotes
optimizer, and post-processing steps seal the result airtight.
"""

__version__ = "0.1.0"

from .errors import ConfigError, PneumotopError, SolveError

__all__ = ["ConfigError", "PneumotopError", "SolveError", "__version__"]
