"""Sturm-sequence kernels for symmetric tridiagonal matrices with a constant
off-diagonal. Compiled with numba; they release the GIL."""
import numpy as np
from numba import njit

_PIVMIN = 1e-300


@njit(cache=True, nogil=True)
def sturm_count(diag, off2, x):
    """Number of eigenvalues strictly below ``x``.

    Counts negative pivots of the LDL^T factorisation of T - x I, where the
    off-diagonal entries all have square ``off2``.
    """
    n = diag.shape[0]
    count = 0
    q = diag[0] - x
    if q < 0.0:
        count += 1
    for i in range(1, n):
        if q == 0.0:
            q = _PIVMIN
        q = diag[i] - x - off2 / q
        if q < 0.0:
            count += 1
    return count


@njit(cache=True, nogil=True)
def bisect_indices(diag, off2, k_start, k_stop, lo, hi, tol):
    """Eigenvalues with indices k_start <= k < k_stop (0-based, ascending),
    each bracketed in [lo, hi] and bisected to absolute width ``tol``."""
    m = k_stop - k_start
    out = np.empty(m)
    for j in range(m):
        k = k_start + j
        a = lo
        b = hi
        # reuse the previous eigenvalue as a lower bracket
        if j > 0 and out[j - 1] > a:
            a = out[j - 1] - tol
        while b - a > tol:
            mid = 0.5 * (a + b)
            if mid == a or mid == b:
                break
            if sturm_count(diag, off2, mid) > k:
                b = mid
            else:
                a = mid
        out[j] = 0.5 * (a + b)
    return out
