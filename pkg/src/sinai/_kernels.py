"""Backend selection for the hot loops.

The compiled extension is used when it imports; setting ``SINAI_PURE_PYTHON=1``
forces the pure-Python fallback (useful for equivalence tests and debugging).
"""

import os

from . import _fallback

try:
    if os.environ.get("SINAI_PURE_PYTHON", "") not in ("", "0"):
        raise ImportError("pure-python backend requested")
    from . import _core as _impl
    BACKEND = "compiled"
except ImportError:
    _impl = _fallback
    BACKEND = "python"

walk = _impl.walk
hit_times = _impl.hit_times
rise_scan = _impl.rise_scan
exit_scan = _impl.exit_scan

__all__ = ["BACKEND", "walk", "hit_times", "rise_scan", "exit_scan"]
