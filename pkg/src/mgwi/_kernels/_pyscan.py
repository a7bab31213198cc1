"""Pure-Python scan kernels (fallback backend)."""
import numpy as np


def min_thin_scan(x1, z, eps):
    """x[0] = x1; x[t] = min(x[t-1], z[t-1]) + eps[t-1]."""
    z = np.asarray(z, dtype=np.int64)
    eps = np.asarray(eps, dtype=np.int64)
    if z.shape != eps.shape or z.ndim != 1:
        raise ValueError("z and eps must be 1-D arrays of equal length")
    n = z.shape[0]
    out = np.empty(n + 1, dtype=np.int64)
    prev = int(x1)
    out[0] = prev
    zl = z.tolist()
    el = eps.tolist()
    for t in range(n):
        zt = zl[t]
        if zt < prev:
            prev = zt
        prev += el[t]
        out[t + 1] = prev
    return out
