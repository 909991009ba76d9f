"""Decoder backend selection: compiled kernel if available, NumPy otherwise.

Set BITPIPES_NO_EXT=1 to force the pure-Python path (used by the benchmark
and the backend-equivalence tests).
"""

from __future__ import annotations

import os

from . import _scfallback

if os.environ.get("BITPIPES_NO_EXT"):
    _impl = _scfallback
else:
    try:
        from . import _sckernel as _impl  # type: ignore[no-redef]
    except ImportError:
        _impl = _scfallback

BACKEND = "compiled" if _impl is not _scfallback else "python"


def sc_decode_batch(llrs, frozen, minsum=True):
    return _impl.sc_decode_batch(llrs, frozen, minsum)
