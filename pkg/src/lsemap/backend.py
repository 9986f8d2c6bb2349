"""Kernel backend selection: compiled extension if built, numpy otherwise.

Set ``LSEMAP_BACKEND=python`` to force the fallback (used by the backend
parity tests and the benchmark).
"""

import os

from . import _pykernels

if os.environ.get("LSEMAP_BACKEND", "").lower() == "python":
    _impl = _pykernels
else:
    try:
        from . import _ckernels as _impl  # type: ignore[no-redef]
    except ImportError:
        _impl = _pykernels

rbf_cross = _impl.rbf_cross
rbf_gram = _impl.rbf_gram
BACKEND_NAME = _impl.BACKEND_NAME


def backend_name() -> str:
    return BACKEND_NAME
