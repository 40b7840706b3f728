"""Compiled inner loops for long matrix-product simulations."""

import math

import numpy as np
from numba import njit


@njit(cache=True, nogil=True)
def markov_path(u, pi1, s1, s2):
    """Binary chain driven by uniforms ``u``; states coded 0 (healthy) and 1 (harsh)."""
    n = u.shape[0]
    out = np.empty(n, dtype=np.int8)
    state = 0 if u[0] < pi1 else 1
    out[0] = state
    for k in range(1, n):
        if state == 0:
            if u[k] < s1:
                state = 1
        elif u[k] < s2:
            state = 0
        out[k] = state
    return out


@njit(cache=True, nogil=True)
def log_growth(mats, idx):
    """Propagate the row vector ``(1/2, 1/2)`` through ``mats[idx[0]] @ mats[idx[1]] @ ...``.

    The vector is renormalised to unit entrywise sum after every factor and
    the log normalisers are accumulated with Neumaier summation.  Returns the
    accumulated log growth and the number of factors applied before the
    vector vanished (``len(idx)`` if it never did).
    """
    v0 = 0.5
    v1 = 0.5
    total = 0.0
    comp = 0.0
    n = idx.shape[0]
    for k in range(n):
        m = mats[idx[k]]
        a = v0 * m[0, 0] + v1 * m[1, 0]
        b = v0 * m[0, 1] + v1 * m[1, 1]
        t = a + b
        if t == 0.0:
            return -math.inf, k
        x = math.log(t)
        s = total + x
        if abs(total) >= abs(x):
            comp += (total - s) + x
        else:
            comp += (x - s) + total
        total = s
        v0 = a / t
        v1 = b / t
    return total + comp, n
