"""Matrix Market reader/writer.

Coordinate files become CSR arrays, array files become dense ndarrays.
Values are written with 17 significant digits so a write/read cycle is exact.
"""

from __future__ import annotations

import os

import numpy as np
import scipy.io
import scipy.sparse as sp

from .errors import MatrixMarketError
from .linalg import as_csr

_REAL_FIELDS = {"real", "integer", "double"}


def read_matrix_market(path: str | os.PathLike):
    try:
        rows, cols, entries, fmt, field, symmetry = scipy.io.mminfo(path)
    except (ValueError, IndexError) as exc:
        raise MatrixMarketError(f"{path}: malformed header: {exc}") from exc
    if field not in _REAL_FIELDS:
        raise MatrixMarketError(f"{path}: unsupported field {field!r} (only real data)")
    try:
        M = scipy.io.mmread(path)
    except (ValueError, IndexError, OverflowError) as exc:
        raise MatrixMarketError(f"{path}: {exc}") from exc
    if sp.issparse(M):
        return as_csr(M)
    return np.asarray(M, dtype=np.float64)


def write_matrix_market(M, path: str | os.PathLike) -> None:
    """Write a sparse matrix in coordinate format or a dense one in array format."""
    if sp.issparse(M):
        data = sp.coo_array(M)
    else:
        data = np.atleast_2d(np.asarray(M, dtype=np.float64))
    scipy.io.mmwrite(path, data, precision=17, symmetry="general")
