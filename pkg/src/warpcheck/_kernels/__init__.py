"""Per-node numerical kernels.

The compiled extension is used when it was built; otherwise the numpy
implementation is loaded. Setting ``WARPCHECK_PURE_PYTHON=1`` forces the
fallback.
"""
import os

from . import _pykernels as pure

if os.environ.get("WARPCHECK_PURE_PYTHON", "") not in ("", "0"):
    compiled = None
else:
    try:
        from . import _ckernels as compiled
    except ImportError:  # extension not built
        compiled = None

_impl = compiled if compiled is not None else pure
BACKEND = "cython" if compiled is not None else "python"

esym = _impl.esym
esym_grad = _impl.esym_grad
pencil_eig = _impl.pencil_eig

__all__ = ["BACKEND", "compiled", "pure", "esym", "esym_grad", "pencil_eig"]
