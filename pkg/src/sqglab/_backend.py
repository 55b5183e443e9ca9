"""Select the quadrature inner-loop backend at import time.

The compiled extension is used when present; ``SQGLAB_BACKEND=python``
forces the numpy fallback (used by the benchmark and the equivalence test).
"""

import os

from . import _quadpy

if os.environ.get("SQGLAB_BACKEND", "").lower() == "python":
    impl = _quadpy
else:
    try:
        from . import _quadcore as impl  # type: ignore[no-redef]
    except ImportError:
        impl = _quadpy

BACKEND_NAME = impl.BACKEND_NAME
rowsums_pow32 = impl.rowsums_pow32
weighted_total = impl.weighted_total


def numpy_impl():
    return _quadpy


def compiled_impl_or_none():
    try:
        from . import _quadcore
        return _quadcore
    except ImportError:
        return None
