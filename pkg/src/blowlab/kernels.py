"""Backend selection for the loop kernels.

The compiled extension is preferred; set ``BLOWLAB_PURE_PYTHON=1`` to force
the numpy fallback.
"""
import os

from . import _pykernels

BACKEND = "python"
if os.environ.get("BLOWLAB_PURE_PYTHON") != "1":
    try:
        from . import _ckernels as _impl

        BACKEND = "cython"
    except ImportError:
        _impl = _pykernels
else:
    _impl = _pykernels

convection_bruteforce = _impl.convection_bruteforce
rk4_log_bernoulli = _impl.rk4_log_bernoulli

__all__ = ["BACKEND", "convection_bruteforce", "rk4_log_bernoulli"]
