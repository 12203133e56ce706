"""Backend selection for the cost kernel.

The compiled extension is used when it was built; set ``NPTP_PURE_PYTHON=1``
to force the pure-Python implementation.
"""

import os

from . import _kernels_py

if os.environ.get("NPTP_PURE_PYTHON", "") not in ("", "0"):
    _impl = _kernels_py
else:
    try:
        from . import _kernels as _impl
    except ImportError:
        _impl = _kernels_py

BACKEND = _impl.BACKEND
tile_layer_costs = _impl.tile_layer_costs

python_tile_layer_costs = _kernels_py.tile_layer_costs


def compiled_tile_layer_costs():
    """The compiled kernel, or None when the extension is unavailable."""
    try:
        from . import _kernels
    except ImportError:
        return None
    return _kernels.tile_layer_costs
