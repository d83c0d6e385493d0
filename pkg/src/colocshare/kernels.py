"""Hot-loop kernels, compiled when available and pure numpy otherwise.

The compiled module is picked at import time.  Set ``COLOCSHARE_PURE=1`` to
force the fallback (the benchmark and the equivalence tests use both).
"""

import os

import numpy as np

from . import _pykernels
from .errors import InvalidParameterError

_MAX_CELLS = 2048

try:
    if os.environ.get("COLOCSHARE_PURE"):
        raise ImportError("fallback forced by COLOCSHARE_PURE")
    from . import _kernels as _impl

    HAVE_EXTENSION = True
except ImportError:
    _impl = _pykernels
    HAVE_EXTENSION = False


def grid_shape(width, height, r):
    """Cells per axis so that each cell is at least ``r`` wide."""
    if r <= 0:
        return _MAX_CELLS, _MAX_CELLS
    nx = int(min(max(1, np.floor(width / r)), _MAX_CELLS))
    ny = int(min(max(1, np.floor(height / r)), _MAX_CELLS))
    return nx, ny


def disk_edges(queries, points, r, width, height, torus=True, backend=None):
    """All (query, point) pairs at distance <= r, sorted by query then point.

    ``queries`` and ``points`` are (n, 2) arrays inside ``[0, width] x [0, height]``.
    ``backend`` may be ``"compiled"`` or ``"python"`` to bypass the import-time choice.
    """
    if not np.isfinite(r) or r < 0:
        raise InvalidParameterError(f"radius must be finite and >= 0, got {r}")
    if torus and 2 * r > min(width, height):
        raise InvalidParameterError(
            f"radius {r} exceeds half the torus side; disks would overlap themselves")
    queries = np.ascontiguousarray(queries, dtype=np.float64).reshape(-1, 2)
    points = np.ascontiguousarray(points, dtype=np.float64).reshape(-1, 2)
    if backend is None:
        impl = _impl
    elif backend == "compiled":
        if not HAVE_EXTENSION:
            raise ImportError("compiled kernels are not built")
        from . import _kernels as impl
    elif backend == "python":
        impl = _pykernels
    else:
        raise ValueError(f"unknown backend {backend!r}")

    nx, ny = grid_shape(width, height, r)
    qi, pj, d = impl.disk_edges(
        np.ascontiguousarray(queries[:, 0]), np.ascontiguousarray(queries[:, 1]),
        np.ascontiguousarray(points[:, 0]), np.ascontiguousarray(points[:, 1]),
        float(r), float(width), float(height), bool(torus), nx, ny)
    order = np.lexsort((pj, qi))
    return qi[order], pj[order], d[order]
