"""Pick the compiled kernels when importable, else the pure-Python ones.

Set ``QBOL_PURE_PYTHON=1`` to force the fallback (the benchmark and the
backend-equivalence tests use this).
"""
from __future__ import annotations

import os

from qbol import _pykernels
from qbol._pykernels import KernelError

kernels = _pykernels
NAME = "python"

if os.environ.get("QBOL_PURE_PYTHON") != "1":
    try:
        from qbol import _kernels as _compiled
    except ImportError:
        pass
    else:
        kernels = _compiled
        NAME = "cython"

__all__ = ["kernels", "NAME", "KernelError"]
