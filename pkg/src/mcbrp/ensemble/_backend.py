"""Select the prediction kernel at import time.

The compiled Cython kernel is used when available; set MCBRP_PURE_PYTHON=1
to force the numpy fallback (the benchmark does this to compare the two).
"""

import os

if os.environ.get("MCBRP_PURE_PYTHON"):
    from . import _treekernel_py as _impl
    BACKEND = "python"
else:
    try:
        from . import _treekernel as _impl  # type: ignore[attr-defined]
        BACKEND = "cython"
    except ImportError:
        from . import _treekernel_py as _impl
        BACKEND = "python"

predict_packed = _impl.predict_packed
