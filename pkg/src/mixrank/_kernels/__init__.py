"""Hot-loop kernels: compiled extension when available, NumPy otherwise.

Set ``MIXRANK_PURE_PYTHON=1`` to force the NumPy backend. ``BACKEND``
reports which one was selected. Both backends are kept in exact
floating-point agreement; see ``benchmarks/bench_kernels.py`` for the
speed comparison.
"""
import os

from . import _numpy

if os.environ.get("MIXRANK_PURE_PYTHON"):
    _impl = _numpy
else:
    try:
        from . import _scan as _impl  # type: ignore[no-redef]
    except ImportError:
        _impl = _numpy

BACKEND = "cython" if _impl is not _numpy else "python"

scan_split = _impl.scan_split
route_tree = _impl.route_tree


def available_backends() -> dict[str, object]:
    """Importable kernel modules keyed by backend name."""
    backends: dict[str, object] = {"python": _numpy}
    try:
        from . import _scan

        backends["cython"] = _scan
    except ImportError:
        pass
    return backends
