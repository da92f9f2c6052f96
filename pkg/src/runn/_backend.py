"""Kernel backend selection.

The compiled extension is used when importable; set ``RUNN_PURE_PYTHON=1``
to force the numpy fallback.
"""

import os

from . import _kernels_py

BACKEND = "python"
first_layer_stack = _kernels_py.first_layer_stack
first_layer_vjp = _kernels_py.first_layer_vjp
activation_stack = _kernels_py.activation_stack

if os.environ.get("RUNN_PURE_PYTHON", "") not in ("1", "true", "yes"):
    try:
        from . import _kernels as _compiled
    except ImportError:
        _compiled = None
    if _compiled is not None:
        BACKEND = "compiled"
        first_layer_stack = _compiled.first_layer_stack
        first_layer_vjp = _compiled.first_layer_vjp
        activation_stack = _compiled.activation_stack


def kernels(name=None):
    """Return (first_layer_stack, first_layer_vjp) for ``name`` in {None, 'python', 'compiled'}."""
    if name is None:
        return first_layer_stack, first_layer_vjp
    if name == "python":
        return _kernels_py.first_layer_stack, _kernels_py.first_layer_vjp
    if name == "compiled":
        from . import _kernels as compiled

        return compiled.first_layer_stack, compiled.first_layer_vjp
    raise ValueError(f"unknown backend {name!r}")


def activation(name=None):
    """Hidden-layer activation stack for ``name`` (same choices as :func:`kernels`)."""
    if name is None:
        return activation_stack
    if name == "python":
        return _kernels_py.activation_stack
    if name == "compiled":
        from . import _kernels as compiled

        return compiled.activation_stack
    raise ValueError(f"unknown backend {name!r}")
