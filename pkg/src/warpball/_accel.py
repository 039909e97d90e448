"""Backend selection for the hot kernels.

The compiled extension is used when it imports; otherwise the numpy reference
implementation takes over.  Setting ``WARPBALL_PURE_PYTHON=1`` forces the
fallback, which the benchmark and the backend-equivalence tests rely on.
"""

from __future__ import annotations

import os

from . import _pyimpl

_core = None
if os.environ.get("WARPBALL_PURE_PYTHON", "") not in ("1", "true", "yes"):
    try:
        from . import _core  # type: ignore[attr-defined]
    except ImportError:
        _core = None

backend = _core if _core is not None else _pyimpl
BACKEND = backend.NAME

rowcum = backend.rowcum
colcum_rev = backend.colcum_rev
picard_apply = backend.picard_apply
filon_laplace = backend.filon_laplace


def available_backends() -> dict:
    """Name to module for every importable implementation."""
    out = {"numpy": _pyimpl}
    if _core is not None:
        out["cython"] = _core
    else:
        try:
            from . import _core as c  # type: ignore[attr-defined]
            out["cython"] = c
        except ImportError:
            pass
    return out
