"""Complete elliptic integrals K(m), E(m) by the arithmetic-geometric mean."""
from __future__ import annotations

import math
from typing import NamedTuple

import numba as nb
import numpy as np

_TOL = 1e-17


@nb.njit(cache=True)
def agm_ke(m, m1):
    """K, E and K - E at parameter m, with the complement m1 = 1 - m supplied
    separately so callers can pass it without cancellation.

    a0 = 1, b0 = sqrt(m1), c0^2 = m; K = pi / (2 a_n) and
    K - E = K * sum_n 2^(n-1) c_n^2.  c_{n+1} = c_n^2 / (4 a_{n+1}) keeps
    every term free of subtraction.
    """
    a = 1.0
    b = math.sqrt(m1)
    csq = m
    s = 0.5 * m
    p2 = 0.5
    for _ in range(40):
        a_next = 0.5 * (a + b)
        c = csq / (4.0 * a_next)
        b = math.sqrt(a * b)
        a = a_next
        csq = c * c
        p2 *= 2.0
        s += p2 * csq
        if csq < _TOL * s:
            break
    k = 0.5 * math.pi / a
    kme = k * s
    return k, k - kme, kme


@nb.njit(cache=True)
def ke_accurate(m, m1):
    """K and E with E accurate to round-off also for m -> 1 (Legendre relation)."""
    k, e, kme = agm_ke(m, m1)
    if m > 0.5:
        kc, ec, kmec = agm_ke(m1, m)
        e = (0.5 * math.pi + k * kmec) / kc
    return k, e


@nb.njit(cache=True)
def _ke_array(m):
    K = np.empty(m.size)
    E = np.empty(m.size)
    for i in range(m.size):
        K[i], E[i] = ke_accurate(m[i], 1.0 - m[i])
    return K, E


class EllipticPair(NamedTuple):
    K: np.ndarray | float
    E: np.ndarray | float


def elliptic_ke(m) -> EllipticPair:
    """Complete elliptic integrals of the first and second kind at parameter m.

    Accepts a scalar or an array; 0 <= m < 1 is required.
    """
    arr = np.asarray(m, dtype=np.float64)
    if np.any(~np.isfinite(arr)) or np.any(arr < 0.0) or np.any(arr >= 1.0):
        raise ValueError("elliptic parameter m must satisfy 0 <= m < 1")
    K, E = _ke_array(np.ascontiguousarray(arr.ravel()))
    if arr.ndim == 0:
        return EllipticPair(float(K[0]), float(E[0]))
    return EllipticPair(K.reshape(arr.shape), E.reshape(arr.shape))
