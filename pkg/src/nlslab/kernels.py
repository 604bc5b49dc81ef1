"""Kernel backend selection: compiled extension if available, numpy otherwise.

Set ``NLSLAB_PURE_PYTHON=1`` to force the numpy fallback.
"""

import os

if os.environ.get("NLSLAB_PURE_PYTHON", "") == "1":
    from . import _kernels_py as _impl
else:
    try:
        from . import _kernels_cy as _impl  # type: ignore[attr-defined]
    except ImportError:
        from . import _kernels_py as _impl

BACKEND = _impl.BACKEND
abs2 = _impl.abs2
phase_rotate = _impl.phase_rotate
