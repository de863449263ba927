"""Sampling backend selection.

Two interchangeable implementations of the hot sampling kernels exist:

* ``compiled`` -- Cython extension with fused scalar loops (built at install
  time when a C toolchain is available);
* ``numpy`` -- vectorized pure-Python fallback.

Both consume the random stream identically (same ``next_double`` count and
order per draw), so a run produces the same artifacts under either backend up
to last-ulp differences in transcendental functions. Selection happens once
at import; set ``CCMCKP_BACKEND=numpy|compiled`` to force a choice.
"""

from __future__ import annotations

import os

from . import rows  # noqa: F401  (re-exported row layout contract)
from . import _numpy_backend

_requested = os.environ.get("CCMCKP_BACKEND", "auto").lower()
if _requested not in ("auto", "compiled", "numpy"):
    raise ImportError(
        f"CCMCKP_BACKEND must be one of auto|compiled|numpy, got {_requested!r}"
    )

_impl = None
if _requested in ("auto", "compiled"):
    try:
        from . import _kernels as _impl  # type: ignore[attr-defined]
    except ImportError:
        if _requested == "compiled":
            raise ImportError(
                "CCMCKP_BACKEND=compiled but the extension is not built; "
                "reinstall with a C toolchain or use CCMCKP_BACKEND=numpy"
            ) from None
        _impl = None
if _impl is None:
    _impl = _numpy_backend

fill_weights = _impl.fill_weights
fill_totals = _impl.fill_totals
BACKEND = _impl.BACKEND_NAME


def available_backends() -> tuple[str, ...]:
    names = ["numpy"]
    try:
        from . import _kernels  # noqa: F401
    except ImportError:
        pass
    else:
        names.insert(0, "compiled")
    return tuple(names)


def get_backend(name: str):
    """Fetch a specific backend module (used by parity tests and benchmarks)."""
    if name == "numpy":
        return _numpy_backend
    if name == "compiled":
        from . import _kernels

        return _kernels
    raise ValueError(f"unknown backend {name!r}")
