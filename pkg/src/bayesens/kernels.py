"""Kernel backend selection.

The compiled ``_ckernels`` extension is used when it was built; otherwise the
numpy implementation in ``_pykernels`` is used. Setting the environment
variable ``BAYESENS_PURE_PYTHON=1`` forces the fallback.
"""
import os

from . import _pykernels

BACKEND = "python"
_impl = _pykernels

if os.environ.get("BAYESENS_PURE_PYTHON") != "1":
    try:
        from . import _ckernels as _impl  # noqa: F811

        BACKEND = "cython"
    except ImportError:
        _impl = _pykernels

unmeasured_ll_grad = _impl.unmeasured_ll_grad
tsb_ll_grad = _impl.tsb_ll_grad

__all__ = ["BACKEND", "unmeasured_ll_grad", "tsb_ll_grad"]
