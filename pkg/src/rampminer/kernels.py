"""Kernel backend selection.

The compiled extension is used when it imports; otherwise the pure-Python
versions. Set ``RAMPMINER_PURE_PYTHON=1`` to force the fallback.
"""

import os

from . import _pure

BACKEND = "python"
_impl = _pure

if os.environ.get("RAMPMINER_PURE_PYTHON", "") not in ("1", "true", "yes"):
    try:
        from . import _ext as _impl  # type: ignore[no-redef]

        BACKEND = "cython"
    except ImportError:  # pragma: no cover - depends on build
        _impl = _pure

viterbi_decode = _impl.viterbi_decode
dtw_distance = _impl.dtw_distance
project_points = _impl.project_points
first_crossing = _impl.first_crossing

__all__ = ["BACKEND", "viterbi_decode", "dtw_distance", "project_points", "first_crossing"]
