"""Kernel backend selection.

The numba backend is used when importable, unless HYPDRIFT_NO_NUMBA is
set to a non-empty value. Both backends are importable directly (as
`_kernels_np` / `_kernels_nb`) for parity tests and benchmarks; this
module just re-exports the chosen one.
"""

import os

from . import _kernels_np as numpy_backend

_nb_err = None
if os.environ.get("HYPDRIFT_NO_NUMBA"):
    numba_backend = None
else:
    try:
        from . import _kernels_nb as numba_backend
    except ImportError as e:  # pragma: no cover - depends on environment
        numba_backend = None
        _nb_err = e

active = numba_backend if numba_backend is not None else numpy_backend
BACKEND = "numba" if numba_backend is not None else "numpy"

sample_increments = active.sample_increments
tree_walk = active.tree_walk
tree_green_visits = active.tree_green_visits
plane_walk = active.plane_walk
plane_gate_corridor = active.plane_gate_corridor
plane_path_hits = active.plane_path_hits
modular_ball = active.modular_ball
bump_values = active.bump_values
bump_fake_from_base = active.bump_fake_from_base

# numpy-only helpers used by the rest of the package
disp_from_logfrob = numpy_backend.disp_from_logfrob
seg_dist_vec = numpy_backend.seg_dist_vec
geodesic_points_from_i = numpy_backend.geodesic_points_from_i
