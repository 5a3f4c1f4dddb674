"""Kernel backend selection.

The compiled Cython core is used when available; otherwise the pure-numpy
reference takes over.  Set PILOTLAB_FORCE_PYTHON=1 to force the fallback
(used by the backend-parity tests and the benchmark).
"""

import os

from . import _ref

if os.environ.get("PILOTLAB_FORCE_PYTHON", "0") not in ("", "0"):
    _backend = _ref
else:
    try:
        from . import _core as _backend  # type: ignore[no-redef]
    except ImportError:
        _backend = _ref

BACKEND = _backend.NAME
interp_time_1d = _backend.interp_time_1d
interp_time_2d = _backend.interp_time_2d

__all__ = ["BACKEND", "interp_time_1d", "interp_time_2d", "_ref"]
