"""Pick the compiled kernels when available, else the numpy fallback.

Set ``OPPLOD_BACKEND=python`` to force the fallback.
"""
import os

from . import _pykernels

_impl = _pykernels
name = "python"

if os.environ.get("OPPLOD_BACKEND", "").lower() != "python":
    try:
        from . import _ckernels as _impl  # noqa: F811
        name = "cython"
    except ImportError:
        pass

delayed_convolve_multi = _impl.delayed_convolve_multi
convolve2d = _impl.convolve2d
