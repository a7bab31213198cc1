"""Scan-kernel backend selection.

The thinning recursion x[t] = min(x[t-1], z[t-1]) + eps[t-1] is the one
loop-carried hot path in the package; everything else vectorizes. A
compiled version is used when the extension was built, with a pure-Python
fallback otherwise. Both consume identical pre-drawn variate arrays, so
their outputs are bit-identical.

Set ``MGWI_BACKEND=python`` or ``MGWI_BACKEND=compiled`` to force a
backend (default: prefer compiled, fall back silently).
"""
import os

from . import _pyscan

_requested = os.environ.get("MGWI_BACKEND", "auto").lower()
if _requested not in {"auto", "compiled", "python"}:
    raise ImportError(
        f"MGWI_BACKEND must be 'auto', 'compiled', or 'python', got {_requested!r}"
    )

if _requested == "python":
    _impl = _pyscan
    BACKEND = "python"
else:
    try:
        from . import _cscan as _impl  # type: ignore[no-redef]

        BACKEND = "compiled"
    except ImportError:
        if _requested == "compiled":
            raise
        _impl = _pyscan
        BACKEND = "python"

min_thin_scan = _impl.min_thin_scan
