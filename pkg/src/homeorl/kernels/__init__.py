"""Hot inner-loop kernels with a compiled core and a numpy fallback.

The backend is chosen once, at import. Set ``HOMEORL_KERNELS=python`` to
force the fallback or ``HOMEORL_KERNELS=c`` to fail loudly when the
extension is missing.
"""

from __future__ import annotations

import os

from . import _pykernels

_choice = os.environ.get("HOMEORL_KERNELS", "auto").lower()
if _choice not in ("auto", "c", "python"):
    raise ImportError(f"HOMEORL_KERNELS must be auto, c or python, got {_choice!r}")

_impl = _pykernels
BACKEND = "python"
if _choice != "python":
    try:
        from . import _ckernels as _impl  # type: ignore[no-redef]

        BACKEND = "c"
    except ImportError:
        if _choice == "c":
            raise

bias_relu = _impl.bias_relu
bias_add = _impl.bias_add
relu_mask_grad = _impl.relu_mask_grad
td_residual = _impl.td_residual
adam_step = _impl.adam_step
observe_window = _impl.observe_window

__all__ = [
    "BACKEND",
    "bias_relu",
    "bias_add",
    "relu_mask_grad",
    "td_residual",
    "adam_step",
    "observe_window",
]
