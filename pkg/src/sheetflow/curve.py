"""Curve state in angle-arclength variables and the geometry derived from it.

The generating curve X(alpha) = (r, z), alpha in [0, pi], is stored on the
extended periodic grid over [0, 2 pi] with r odd and z even about alpha = pi.
Node j = 0 and j = N/2 sit on the symmetry axis.
"""
from __future__ import annotations

import logging
from dataclasses import dataclass, replace

import numpy as np

from . import spectral as sp
from .spectral import FloatArray

log = logging.getLogger(__name__)


class GeometryError(ValueError):
    """Raised for degenerate curves (non-positive spacing, off-axis r = 0)."""


@dataclass(frozen=True)
class CurveState:
    t: float
    theta: FloatArray
    s_alpha: FloatArray
    gamma: FloatArray
    sigma: float

    def __post_init__(self):
        n = self.theta.size
        sp.check_grid(n)
        if self.s_alpha.size != n or self.gamma.size != n:
            raise ValueError("theta, s_alpha and gamma must share one grid")

    @property
    def n(self) -> int:
        return self.theta.size

    @property
    def alpha(self) -> FloatArray:
        return sp.grid(self.n)

    @property
    def phi(self) -> FloatArray:
        """Periodic part theta - alpha."""
        return self.theta - self.alpha

    def with_fields(self, **kw) -> "CurveState":
        return replace(self, **kw)

    @classmethod
    def from_periodic(cls, t, phi, s_alpha, gamma, sigma) -> "CurveState":
        phi = np.asarray(phi, dtype=np.float64)
        return cls(float(t), phi + sp.grid(phi.size), np.asarray(s_alpha, dtype=np.float64),
                   np.asarray(gamma, dtype=np.float64), float(sigma))


def sphere(n: int, radius: float = 1.0, sigma: float = 0.2, gamma=None) -> CurveState:
    """theta = alpha, s_alpha = radius; gamma given as callable of alpha or None."""
    alpha = sp.grid(n)
    g = np.zeros(n) if gamma is None else np.asarray(gamma(alpha), dtype=np.float64)
    return CurveState(0.0, alpha.copy(), np.full(n, float(radius)), g, float(sigma))


@dataclass(frozen=True)
class DerivedGeometry:
    r: FloatArray
    z: FloatArray
    s: FloatArray
    L: float
    L_p: float
    kappa_z: FloatArray
    kappa_r: FloatArray
    ds_min: float
    r_alpha: FloatArray
    z_alpha: FloatArray
    theta_alpha: FloatArray
    closure_residual: float
    axis_drift: float


def _axis_nodes(n: int) -> tuple[int, int]:
    return 0, n // 2


def curvatures(state: CurveState, r: FloatArray, z_alpha: FloatArray,
               theta_alpha: FloatArray | None = None) -> tuple[FloatArray, FloatArray]:
    """kappa_z = theta_alpha / s_alpha, kappa_r = z_alpha / (s_alpha r).

    On the two axis nodes kappa_r takes its limit value kappa_z.
    """
    if theta_alpha is None:
        theta_alpha = 1.0 + sp.derivative(state.phi)
    kz = theta_alpha / state.s_alpha
    i0, i1 = _axis_nodes(state.n)
    off = np.ones(state.n, dtype=bool)
    off[[i0, i1]] = False
    bad = np.flatnonzero(off & (r == 0.0))
    if bad.size:
        raise GeometryError(f"r vanishes at off-axis node(s) {bad.tolist()}: curve touches the axis")
    kr = np.empty_like(kz)
    kr[off] = z_alpha[off] / (state.s_alpha[off] * r[off])
    kr[~off] = kz[~off]
    return kz, kr


def reconstruct(state: CurveState, z_anchor: float = 0.0) -> DerivedGeometry:
    """Integrate X_alpha = s_alpha (cos theta, sin theta) from X(0) = (0, z_anchor)."""
    sa = state.s_alpha
    if np.any(~np.isfinite(sa)) or np.any(sa <= 0.0):
        bad = np.flatnonzero(~(sa > 0.0))
        raise GeometryError(f"s_alpha must be positive; fails at nodes {bad[:10].tolist()}")
    ra = sa * np.cos(state.theta)
    za = sa * np.sin(state.theta)
    mr, mz = float(np.mean(ra)), float(np.mean(za))
    closure = float(np.hypot(mr, mz) * 2.0 * np.pi)
    if closure > 1e-8:
        log.debug("closure residual %.3e removed before integration", closure)
    ra = ra - mr
    za = za - mz
    r = sp.antiderivative_from_zero(ra)
    z = sp.antiderivative_from_zero(za) + z_anchor
    s = sp.antiderivative_from_zero(sa)
    n = state.n
    L_p = float(2.0 * np.pi * np.mean(sa))
    L = float(s[n // 2])
    axis_drift = float(abs(r[n // 2]))
    theta_alpha = 1.0 + sp.derivative(state.phi)
    kz, kr = curvatures(state, r, za, theta_alpha)
    dx = np.diff(np.append(r, r[0]))
    dz = np.diff(np.append(z, z[0]))
    ds_min = float(np.min(np.hypot(dx, dz)))
    return DerivedGeometry(r=r, z=z, s=s, L=L, L_p=L_p, kappa_z=kz, kappa_r=kr,
                           ds_min=ds_min, r_alpha=ra, z_alpha=za, theta_alpha=theta_alpha,
                           closure_residual=closure, axis_drift=axis_drift)


def center_midplane(geom: DerivedGeometry) -> DerivedGeometry:
    """Shift z so that the two axis points are symmetric about z = 0."""
    n = geom.z.size
    shift = 0.5 * (geom.z[0] + geom.z[n // 2])
    return replace(geom, z=geom.z - shift)


def enclosed_volume(geom: DerivedGeometry) -> float:
    """pi * integral_0^pi r^2 z_alpha d alpha (spectral quadrature)."""
    n = geom.r.size
    f = geom.r**2 * geom.z_alpha
    return float(np.pi * sp.antiderivative_from_zero(f)[n // 2])


def reflect_index(n: int) -> np.ndarray:
    return (-np.arange(n)) % n


def symmetrize(state: CurveState) -> CurveState:
    """Project onto curves symmetric about alpha = pi.

    theta - alpha is made odd, s_alpha even and gamma odd under alpha -> -alpha.
    """
    j = reflect_index(state.n)
    phi = state.phi
    phi = 0.5 * (phi - phi[j])
    sa = 0.5 * (state.s_alpha + state.s_alpha[j])
    g = 0.5 * (state.gamma - state.gamma[j])
    return CurveState.from_periodic(state.t, phi, sa, g, state.sigma)


def symmetry_residual(state: CurveState) -> float:
    j = reflect_index(state.n)
    phi = state.phi
    return float(max(np.max(np.abs(phi + phi[j])),
                     np.max(np.abs(state.s_alpha - state.s_alpha[j])),
                     np.max(np.abs(state.gamma + state.gamma[j]))))


def from_polar(eta, deta, d2eta, n: int, sigma: float = 0.2, gamma=None) -> CurveState:
    """Curve r = eta(phi) sin(phi), z = -eta(phi) cos(phi) parametrized by the
    polar angle phi = alpha (non-uniform spacing in general)."""
    a = sp.grid(n)
    e, de = eta(a), deta(a)
    rp = de * np.sin(a) + e * np.cos(a)
    zp = -de * np.cos(a) + e * np.sin(a)
    sa = np.hypot(rp, zp)
    theta = np.unwrap(np.arctan2(zp, rp))
    theta -= 2.0 * np.pi * np.round(theta[0] / (2.0 * np.pi))
    g = np.zeros(n) if gamma is None else np.asarray(gamma(a), dtype=np.float64)
    return CurveState(0.0, theta, sa, g, float(sigma))


def polar_curvature(eta, deta, d2eta, phi) -> FloatArray:
    e, de, dde = eta(phi), deta(phi), d2eta(phi)
    return (e * e + 2.0 * de * de - e * dde) / (e * e + de * de) ** 1.5
