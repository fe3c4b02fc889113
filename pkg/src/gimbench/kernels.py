"""Select the compiled integrator core, falling back to pure Python.

Set ``GIMBENCH_PURE_PYTHON=1`` to force the fallback.
"""
import os

from . import _kernels_py as python_backend

compiled_backend = None
if not os.environ.get("GIMBENCH_PURE_PYTHON"):
    try:
        from . import _kernels as compiled_backend
    except ImportError:  # extension not built
        compiled_backend = None

_active = compiled_backend or python_backend
BACKEND = "compiled" if compiled_backend is not None else "python"

integrate_constant = _active.integrate_constant
integrate_sampled = _active.integrate_sampled
