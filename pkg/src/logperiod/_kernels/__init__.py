"""Hot-loop kernels with a compiled core and a numpy fallback.

The compiled extension is used when it imports; set ``LOGPERIOD_PURE_PYTHON=1``
to force the numpy implementation. ``BACKEND`` names the active choice.
"""
import os

from . import _grid_py
from ._grid_py import SHAPE_COSINE, SHAPE_COSMOD, SHAPE_SAW, solve_full_pivot

try:
    from . import _grid_cy
except ImportError:  # extension not built
    _grid_cy = None

if _grid_cy is not None and not os.environ.get("LOGPERIOD_PURE_PYTHON"):
    grid_rss = _grid_cy.grid_rss
    BACKEND = "cython"
else:
    grid_rss = _grid_py.grid_rss
    BACKEND = "python"

BACKENDS = {"python": _grid_py.grid_rss}
if _grid_cy is not None:
    BACKENDS["cython"] = _grid_cy.grid_rss

__all__ = ["grid_rss", "solve_full_pivot", "BACKEND", "BACKENDS",
           "SHAPE_COSINE", "SHAPE_COSMOD", "SHAPE_SAW"]
