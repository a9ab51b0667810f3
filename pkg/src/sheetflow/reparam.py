"""Non-iterative uniform (arclength) reparametrization and curve comparison."""
from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np

from . import spectral as sp
from .curve import CurveState, DerivedGeometry, center_midplane, reconstruct
from .meshref import arclength_coeffs_up, to_uniform_samples, upsample_arclength
from .spectral import FloatArray


@dataclass(frozen=True)
class UniformCurve:
    theta_u: FloatArray
    kappa_u: FloatArray
    gamma_u: FloatArray
    L_p: float
    t: float = 0.0
    sigma: float = 0.0

    def as_state(self) -> CurveState:
        n = self.theta_u.size
        return CurveState(self.t, self.theta_u, np.full(n, self.L_p / (2.0 * np.pi)),
                          self.gamma_u, self.sigma)


def _uniform_field(f: FloatArray, up, n: int, n_up: int, eps_rel: float) -> FloatArray:
    spec = arclength_coeffs_up(sp.resample(f, n_up), up, n // 2, eps_rel)
    return to_uniform_samples(spec)


def to_uniform(state: CurveState, geom: DerivedGeometry, n_up: int | None = None,
               eps_rel: float = 1e-15) -> UniformCurve:
    """Resample curvature and sheet strength at equally spaced arclength.

    gamma is a density in alpha (jump times s_alpha), so the invariant
    gamma / s_alpha is transformed and rescaled by the new spacing L_p / 2 pi.
    """
    n = state.n
    n_up = 32 * n if n_up is None else n_up
    up = upsample_arclength(state.s_alpha, n_up)
    kappa_u = _uniform_field(geom.kappa_z, up, n, n_up, eps_rel)
    jump_u = _uniform_field(state.gamma / state.s_alpha, up, n, n_up, eps_rel)
    sa_u = up.L_p / (2.0 * np.pi)
    turn = sa_u * kappa_u
    # theta gains exactly 2 pi per period; keep the start angle
    phi_u = sp.antiderivative_from_zero(turn - np.mean(turn))
    theta_u = state.theta[0] + sp.grid(n) + phi_u
    return UniformCurve(theta_u=theta_u, kappa_u=kappa_u, gamma_u=jump_u * sa_u,
                        L_p=up.L_p, t=state.t, sigma=state.sigma)


def uniform_geometry(state: CurveState, z_anchor: float = 0.0) -> DerivedGeometry:
    g = reconstruct(state, z_anchor)
    return reconstruct(to_uniform(state, g).as_state(), z_anchor)


def _anchored(state: CurveState, z_anchor: float | str) -> DerivedGeometry:
    if z_anchor == "midplane":
        return center_midplane(reconstruct(state))
    return reconstruct(state, float(z_anchor))


def geometric_distance(a: CurveState, b: CurveState, z_anchor: float | str = 0.0) -> float:
    """max_j |X_a - X_b| / max_j |X_a| after uniformizing both curves.

    Both curves start on the axis at z = z_anchor, or are centred on z = 0
    when z_anchor is "midplane". Curves on different grids are compared on
    the finer one (band-limited resampling of the uniformized fields).
    """
    ua = to_uniform(a, reconstruct(a))
    ub = to_uniform(b, reconstruct(b))
    if abs(ua.L_p - ub.L_p) > 0.1 * max(ua.L_p, ub.L_p):
        warnings.warn("curve lengths differ by more than 10%; distance may be meaningless",
                      RuntimeWarning, stacklevel=2)
    n = max(a.n, b.n)
    ga = _anchored(_refine(ua, n).as_state(), z_anchor)
    gb = _anchored(_refine(ub, n).as_state(), z_anchor)
    d = np.hypot(ga.r - gb.r, ga.z - gb.z)
    return float(np.max(d) / np.max(np.hypot(ga.r, ga.z)))


def _refine(u: UniformCurve, n: int) -> UniformCurve:
    m = u.theta_u.size
    if m == n:
        return u
    phi = sp.resample(u.theta_u - sp.grid(m), n)
    return UniformCurve(theta_u=phi + sp.grid(n), kappa_u=sp.resample(u.kappa_u, n),
                        gamma_u=sp.resample(u.gamma_u, n), L_p=u.L_p, t=u.t, sigma=u.sigma)
