"""Extended-precision linear algebra on numpy object arrays of MPFR floats."""

from __future__ import annotations

import contextlib

import gmpy2
import numpy as np
from gmpy2 import mpfr

from .errors import NumericalError

DEFAULT_PRECISION = 256


@contextlib.contextmanager
def precision(bits: int):
    """Run the body with the calling thread's MPFR precision set to ``bits``."""
    if bits < 53:
        raise ValueError("precision must be at least 53 bits")
    with gmpy2.context(gmpy2.get_context(), precision=int(bits)):
        yield


def to_mp(values) -> np.ndarray:
    arr = np.asarray(values)
    out = np.empty(arr.shape, dtype=object)
    flat = out.reshape(-1)
    for i, v in enumerate(arr.reshape(-1)):
        flat[i] = mpfr(v) if isinstance(v, (int, gmpy2.mpfr)) else mpfr(float(v))
    return out


def to_float(values) -> np.ndarray:
    arr = np.asarray(values, dtype=object)
    return np.array([float(v) for v in arr.reshape(-1)], dtype=float).reshape(arr.shape)


def zeros(shape) -> np.ndarray:
    out = np.empty(shape, dtype=object)
    out.reshape(-1)[:] = [mpfr(0)] * out.size
    return out


def cholesky(a: np.ndarray) -> np.ndarray:
    """Lower Cholesky factor of a symmetric positive definite object matrix."""
    n = a.shape[0]
    low = zeros((n, n))
    for j in range(n):
        s = a[j, j] - (low[j, :j] @ low[j, :j] if j else 0)
        if not s > 0:
            raise NumericalError(f"Cholesky breakdown at pivot {j}: matrix is not positive definite")
        d = gmpy2.sqrt(s)
        low[j, j] = d
        if j + 1 < n:
            col = a[j + 1:, j] - (low[j + 1:, :j] @ low[j, :j] if j else 0)
            low[j + 1:, j] = col / d
    return low


def lower_inverse(low: np.ndarray) -> np.ndarray:
    """Inverse of a lower-triangular object matrix by forward substitution."""
    n = low.shape[0]
    inv = zeros((n, n))
    for i in range(n):
        inv[i, i] = 1 / low[i, i]
        for j in range(i):
            inv[i, j] = -(low[i, j:i] @ inv[j:i, j]) / low[i, i]
    return inv


def norm(v: np.ndarray):
    return gmpy2.sqrt(sum((x * x for x in v), mpfr(0)))
