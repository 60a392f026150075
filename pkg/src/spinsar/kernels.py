"""Backend selection for the beamforming inner loops.

Prefers the compiled Cython extension; falls back to the NumPy reference
implementation when the extension is missing or SPINSAR_FORCE_FALLBACK=1
is set. Both backends expose the same functions with identical semantics.
"""

from __future__ import annotations

import os

from . import _kernels_py

if os.environ.get("SPINSAR_FORCE_FALLBACK") == "1":
    _impl = _kernels_py
else:
    try:
        from . import _kernels_c as _impl  # type: ignore[no-redef]
    except ImportError:
        _impl = _kernels_py

azimuth_sum = _impl.azimuth_sum
direct_sum = _impl.direct_sum


def backend_name() -> str:
    """Either 'compiled' or 'numpy'."""
    return _impl.BACKEND


def get_backend(name: str):
    """Fetch a specific backend module ('compiled', 'numpy', or 'active')."""
    if name == "active":
        return _impl
    if name == "numpy":
        return _kernels_py
    if name == "compiled":
        from . import _kernels_c

        return _kernels_c
    raise ValueError(f"unknown backend {name!r}")
