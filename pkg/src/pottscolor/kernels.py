"""Backend selection for the hot loops.

The compiled extension is preferred; the pure-Python module is used if the
extension was not built or ``POTTSCOLOR_PURE_PYTHON`` is set to a non-empty
value other than ``0``.
"""
import os

if os.environ.get("POTTSCOLOR_PURE_PYTHON", "") not in ("", "0"):
    from pottscolor import _kernels_py as _impl

    BACKEND = "python"
else:
    try:
        from pottscolor import _kernels as _impl

        BACKEND = "cython"
    except ImportError:
        from pottscolor import _kernels_py as _impl

        BACKEND = "python"

accept_pairs = _impl.accept_pairs
sa_sweep = _impl.sa_sweep

__all__ = ["BACKEND", "accept_pairs", "sa_sweep"]
