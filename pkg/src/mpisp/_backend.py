"""Kernel selection.

``MPISP_BACKEND`` picks the implementation: ``auto`` (compiled when
available), ``compiled`` (fail if missing) or ``python``.
"""
import os

_choice = os.environ.get("MPISP_BACKEND", "auto").strip().lower()

if _choice not in ("auto", "compiled", "python"):
    raise ImportError("MPISP_BACKEND must be auto, compiled or python, got %r" % _choice)

kernel = None
if _choice in ("auto", "compiled"):
    try:
        from . import _kernel_c as kernel
    except ImportError:
        if _choice == "compiled":
            raise
if kernel is None:
    from . import _kernel as kernel

NAME = "compiled" if kernel.is_compiled() else "python"


def load(name):
    """Return a specific kernel module (``compiled`` or ``python``)."""
    if name == "compiled":
        from . import _kernel_c
        return _kernel_c
    if name == "python":
        from . import _kernel
        return _kernel
    raise ValueError(name)
