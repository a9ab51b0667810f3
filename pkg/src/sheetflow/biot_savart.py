"""Axisymmetric Biot-Savart velocity of a vortex sheet without swirl.

For a target X = (r, z) and a source X' = (r', z') carrying strength gamma',

    w_z = 1/(2 pi) PV int_0^pi (gamma'/rho2) [K - (dz^2 + r^2 - r'^2)/rho1^2 E] da'
    w_r = 1/(2 pi) PV int_0^pi (gamma'/rho2) (dz/r) [K - (dz^2 + r^2 + r'^2)/rho1^2 E] da'

with dz = z' - z, rho1^2 = dz^2 + (r'-r)^2, rho2^2 = dz^2 + (r'+r)^2 and
K, E evaluated at m = 4 r r'/rho2^2 (complement m1 = rho1^2/rho2^2).

Quadrature
----------
(r, z, gamma) are Fourier-interpolated to M uniform nodes on [0, pi] that
include every target.  Near the target the integrand splits as
f = b(a') ln|a' - a| + g(a'), where b follows exactly from

    K(m) = K(m1)/pi ln(16/m1) + smooth,  E(m) = (K(m1) - E(m1))/pi ln(16/m1) + smooth.

The rule is the trapezoid with the singular node removed, plus the
finite part h g(a) (extrapolated from symmetric neighbours), the local
log term h b(a) ln(h / 2 pi), and the next zeta-function correction in
h^3 b''(a).  The smooth endpoint behaviour of the integrand (it vanishes
like (a')^3 at the axis) keeps the trapezoid error at O(h^4).
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numba as nb
import numpy as np

from . import spectral as sp
from .curve import CurveState, DerivedGeometry
from .elliptic import EllipticPair, agm_ke, elliptic_ke, ke_accurate
from .spectral import FloatArray

# zeta'(-2) = -zeta(3) / (4 pi^2)
ZETA_PRIME_M2 = -0.030448457058393270780


class DegenerateGeometryError(ArithmeticError):
    """Non-finite kernel values; carries the offending target index."""

    def __init__(self, index: int):
        super().__init__(f"non-finite Biot-Savart kernel at target node {index}")
        self.index = index


@dataclass(frozen=True)
class SheetVelocity:
    w_r: FloatArray
    w_z: FloatArray
    U: FloatArray
    Wt: FloatArray


def default_quad_nodes(n: int) -> int:
    return 4 * n + 1


def check_quad_nodes(n: int, m_quad: int) -> None:
    if m_quad % 2 == 0 or m_quad < 2 * n + 1:
        raise ValueError(f"M_quad must be odd and >= 2N+1 = {2 * n + 1}, got {m_quad}")
    if (m_quad - 1) % (n // 2):
        raise ValueError(f"M_quad - 1 must be a multiple of N/2 = {n // 2}, got {m_quad}")


@nb.njit(cache=True)
def _pairwise(buf, n):
    # fixed-shape tree: the reduction order depends only on n
    while n > 1:
        half = n // 2
        for i in range(half):
            buf[i] = buf[2 * i] + buf[2 * i + 1]
        if n % 2:
            buf[half] = buf[n - 1]
            n = half + 1
        else:
            n = half
    return buf[0]


@nb.njit(cache=True)
def _kernel(r, z, rp, zp, gp):
    """(f_r, f_z) integrands for an off-axis target, source != target."""
    dz = zp - z
    dr = rp - r
    rho1sq = dz * dz + dr * dr
    rho2sq = dz * dz + (rp + r) * (rp + r)
    m = max(4.0 * r * rp / rho2sq, 0.0)
    m1 = min(rho1sq / rho2sq, 1.0)
    k, e = ke_accurate(m, m1)
    t = gp / (2.0 * math.pi * math.sqrt(rho2sq))
    base = dz * dz + r * r
    fz = t * (k - (base - rp * rp) / rho1sq * e)
    fr = t * (dz / r) * (k - (base + rp * rp) / rho1sq * e)
    return fr, fz


@nb.njit(cache=True)
def _log_coeff(r, z, rp, zp, gp):
    """(b_r, b_z): coefficients of ln|a' - a| in the two integrands."""
    dz = zp - z
    dr = rp - r
    rho1sq = dz * dz + dr * dr
    rho2sq = dz * dz + (rp + r) * (rp + r)
    m = max(4.0 * r * rp / rho2sq, 0.0)
    m1 = min(rho1sq / rho2sq, 1.0)
    kc, ec, kmec = agm_ke(m1, m)
    kl = kc / math.pi
    el = kmec / math.pi
    t = gp / (2.0 * math.pi * math.sqrt(rho2sq))
    base = dz * dz + r * r
    bz = -2.0 * t * (kl - (base - rp * rp) / rho1sq * el)
    br = -2.0 * t * (dz / r) * (kl - (base + rp * rp) / rho1sq * el)
    return br, bz


@nb.njit(cache=True)
def _axis_target(p, rq, zq, gq, hq, f_limit):
    """w_z at an axis node (r = 0); the kernel is regular there."""
    mq = rq.size
    buf = np.empty(mq)
    z = zq[p]
    for k in range(mq):
        if k == p:
            f = f_limit
        else:
            dz = zq[k] - z
            rho = math.sqrt(dz * dz + rq[k] * rq[k])
            f = gq[k] * rq[k] * rq[k] / (2.0 * rho * rho * rho)
        if k == 0 or k == mq - 1:
            f *= 0.5
        buf[k] = f
    return hq * _pairwise(buf, mq)


@nb.njit(cache=True)
def _interior_target(p, rq, zq, gq, hq):
    mq = rq.size
    r = rq[p]
    z = zq[p]
    fr = np.empty(mq)
    fz = np.empty(mq)
    for k in range(mq):
        if k == p:
            fr[k] = 0.0
            fz[k] = 0.0
        else:
            fr[k], fz[k] = _kernel(r, z, rq[k], zq[k], gq[k])
    # log coefficients at p-3..p+3; b_r(a) = 0, b_z(a) = -gamma / (4 pi r)
    br = np.zeros(7)
    bz = np.zeros(7)
    for l in range(-3, 4):
        if l == 0:
            bz[3] = -gq[p] / (4.0 * math.pi * r)
        else:
            br[l + 3], bz[l + 3] = _log_coeff(r, z, rq[p + l], zq[p + l], gq[p + l])
    # finite part by even extrapolation of g(a +- l h)
    er = np.zeros(3)
    ez = np.zeros(3)
    for l in range(1, 4):
        lg = math.log(l * hq)
        er[l - 1] = 0.5 * ((fr[p + l] - br[3 + l] * lg) + (fr[p - l] - br[3 - l] * lg))
        ez[l - 1] = 0.5 * ((fz[p + l] - bz[3 + l] * lg) + (fz[p - l] - bz[3 - l] * lg))
    c0r = 1.5 * er[0] - 0.6 * er[1] + 0.1 * er[2]
    c0z = 1.5 * ez[0] - 0.6 * ez[1] + 0.1 * ez[2]
    fr[0] *= 0.5
    fr[mq - 1] *= 0.5
    fz[0] *= 0.5
    fz[mq - 1] *= 0.5
    sr = _pairwise(fr, mq)
    sz = _pairwise(fz, mq)
    loc = math.log(hq / (2.0 * math.pi))
    d2r = (br[4] - 2.0 * br[3] + br[2]) / (hq * hq)
    d2z = (bz[4] - 2.0 * bz[3] + bz[2]) / (hq * hq)
    c3 = ZETA_PRIME_M2 * hq * hq * hq
    wr = hq * (sr + c0r + br[3] * loc) + c3 * d2r
    wz = hq * (sz + c0z + bz[3] * loc) + c3 * d2z
    return wr, wz


@nb.njit(cache=True, parallel=True)
def _half_velocity(rq, zq, gq, stride, nh, hq, f0, fpi):
    """w_r, w_z at targets a_j = 2 pi j / N, j = 0..N/2 (quadrature index j*stride)."""
    wr = np.zeros(nh + 1)
    wz = np.zeros(nh + 1)
    for j in nb.prange(nh + 1):
        p = j * stride
        if j == 0:
            wz[j] = _axis_target(p, rq, zq, gq, hq, f0)
        elif j == nh:
            wz[j] = _axis_target(p, rq, zq, gq, hq, fpi)
        else:
            wr[j], wz[j] = _interior_target(p, rq, zq, gq, hq)
    return wr, wz


def _to_quad_nodes(f: FloatArray, m_quad: int) -> FloatArray:
    """Band-limited values of an extended-grid field at a = k pi/(M-1), k < M."""
    return sp.resample(f, 2 * (m_quad - 1))[:m_quad]


def axis_velocities(state: CurveState, geom: DerivedGeometry, m_quad: int | None = None):
    """Convenience accessor: (w_z at a = 0, w_z at a = pi)."""
    v = principal_velocity(state, geom, m_quad)
    return float(v.w_z[0]), float(v.w_z[state.n // 2])


def principal_velocity(state: CurveState, geom: DerivedGeometry,
                       m_quad: int | None = None) -> SheetVelocity:
    """Average sheet velocity W = (w_r, w_z) at every grid node, and its
    normal and tangential components U = W.n, Wt = W.t."""
    n = state.n
    if m_quad is None:
        m_quad = default_quad_nodes(n)
    check_quad_nodes(n, m_quad)
    nh = n // 2
    stride = (m_quad - 1) // nh
    hq = np.pi / (m_quad - 1)
    rq = _to_quad_nodes(geom.r, m_quad)
    zq = _to_quad_nodes(geom.z, m_quad)
    gq = _to_quad_nodes(state.gamma, m_quad)
    # the axis nodes lie exactly on the axis
    rq[0] = 0.0
    rq[-1] = 0.0
    g_alpha = sp.derivative(state.gamma)
    sa = state.s_alpha
    f0 = g_alpha[0] / (2.0 * sa[0])
    fpi = -g_alpha[nh] / (2.0 * sa[nh])
    wr_h, wz_h = _half_velocity(rq, zq, gq, stride, nh, hq, f0, fpi)
    bad = np.flatnonzero(~(np.isfinite(wr_h) & np.isfinite(wz_h)))
    if bad.size:
        raise DegenerateGeometryError(int(bad[0]))
    # extension: w_r odd, w_z even about a = pi
    w_r = np.empty(n)
    w_z = np.empty(n)
    w_r[: nh + 1] = wr_h
    w_z[: nh + 1] = wz_h
    w_r[nh + 1:] = -wr_h[1:nh][::-1]
    w_z[nh + 1:] = wz_h[1:nh][::-1]
    w_r[0] = 0.0
    w_r[nh] = 0.0
    c, s = np.cos(state.theta), np.sin(state.theta)
    U = -s * w_r + c * w_z
    Wt = c * w_r + s * w_z
    return SheetVelocity(w_r=w_r, w_z=w_z, U=U, Wt=Wt)


__all__ = [
    "DegenerateGeometryError",
    "EllipticPair",
    "SheetVelocity",
    "default_quad_nodes",
    "elliptic_ke",
    "principal_velocity",
]
