"""Backend selection for the hot kernels.

The compiled extension ``_kernels`` is used when it was built; otherwise the
numpy fallback in ``_pykernels``.  Set ``VQCOLLIDE_PURE_PYTHON=1`` to force
the fallback.
"""

import os

from . import _pykernels

if os.environ.get("VQCOLLIDE_PURE_PYTHON"):
    _impl = _pykernels
else:
    try:
        from . import _kernels as _impl
    except ImportError:  # extension not built
        _impl = _pykernels

BACKEND = "python" if _impl is _pykernels else "compiled"

pauli_apply = _impl.pauli_apply
spline_eval = _impl.spline_eval
lcu_apply = _impl.lcu_apply
dopri_lcu = _impl.dopri_lcu
avqds_run = _impl.avqds_run
dopri = _pykernels.dopri


def backend_module(name):
    """The kernel module for ``"python"`` or ``"compiled"`` (ImportError if unbuilt)."""
    if name == "python":
        return _pykernels
    if name == "compiled":
        from . import _kernels

        return _kernels
    raise ValueError(f"unknown backend {name!r}")
