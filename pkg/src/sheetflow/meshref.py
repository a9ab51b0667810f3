"""Curvature-driven mesh refinement.

A guideline GL(s) is built from the curvature as a function of arclength:
its Fourier coefficients in s are computed from non-uniform samples with a
type-1 NUFFT, the analytic envelope of the uniform-in-s signal is smoothed
by a heat kernel, and the result is sampled back at the grid nodes with a
type-2 NUFFT.  The mesh density R is proportional to 1/GL, ramped in from
the uniform density 1/pi, and the tangential velocity V keeps s_alpha = R L.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import nufft
from . import spectral as sp
from .curve import CurveState, DerivedGeometry
from .spectral import FloatArray, Spectrum


@dataclass(frozen=True)
class GuidelineParams:
    a: float = 20.0
    d: float = 5.0
    delta_R: float = 0.125
    k_max: int | None = None
    N_up: int | None = None
    eps_rel: float = 1e-15

    def __post_init__(self):
        if not 0.0 < self.delta_R < 1.0:
            raise ValueError("delta_R must lie in (0, 1)")
        if not self.a > 0.0:
            raise ValueError("heat-kernel sharpness a must be positive")
        if self.d < 0.0:
            raise ValueError("ramp rate d must be non-negative")

    def resolved(self, n: int) -> "GuidelineParams":
        """Fill grid-dependent defaults: k_max = 8 (N/2), N_up = 32 N."""
        k_max = self.k_max if self.k_max is not None else 4 * n
        n_up = self.N_up if self.N_up is not None else 32 * n
        if k_max < n // 2:
            raise ValueError(f"k_max must be >= N/2 = {n // 2}")
        if n_up < 2 * k_max:
            raise ValueError(f"N_up must be >= 2 k_max = {2 * k_max}")
        sp.check_grid(n_up)
        return GuidelineParams(self.a, self.d, self.delta_R, k_max, n_up, self.eps_rel)


@dataclass(frozen=True)
class Guideline:
    gl_at_nodes: FloatArray
    gl_uniform: FloatArray


@dataclass(frozen=True)
class RFunction:
    R: FloatArray
    dRdt: FloatArray | None = None
    tau: float | None = None


@dataclass(frozen=True)
class Upsampled:
    """Fields on the upsampled alpha grid needed by the arclength transform."""

    s: FloatArray
    s_alpha: FloatArray
    L_p: float


def upsample_arclength(s_alpha: FloatArray, n_up: int) -> Upsampled:
    sa = sp.resample(s_alpha, n_up)
    if np.any(sa <= 0.0):
        raise ValueError("upsampled s_alpha is not positive: arclength is not monotone")
    s = sp.antiderivative_from_zero(sa)
    return Upsampled(s=s, s_alpha=sa, L_p=float(2.0 * np.pi * np.mean(sa)))


def _check_monotone(s: FloatArray) -> None:
    if np.any(np.diff(s) <= 0.0):
        raise ValueError("arclength s is not strictly increasing")


def arclength_coeffs_up(f_up: FloatArray, up: Upsampled, k_max: int,
                        eps_rel: float = 1e-15) -> Spectrum:
    """Coefficients in s of samples already on the upsampled grid."""
    _check_monotone(up.s)
    n_up = up.s.size
    h = 2.0 * np.pi / n_up
    x = 2.0 * np.pi * up.s / up.L_p
    plan = nufft.NufftPlan(eps_rel, 2 * k_max)
    c = nufft.type1(f_up * up.s_alpha * (h / up.L_p), x, plan)
    return Spectrum(c)


def arclength_coeffs(f: FloatArray, geom_or_state, k_max: int, n_up: int | None = None,
                     eps_rel: float = 1e-15) -> Spectrum:
    """f_hat(k) = (h/L_p) sum_j f(s_j) s_alpha,j exp(-2 pi i k s_j / L_p), k = -k_max..k_max-1.

    ``geom_or_state`` supplies s_alpha (a CurveState, or anything with an
    ``s_alpha`` attribute); f and s_alpha are upsampled to n_up (default 32 N)
    first.
    """
    f = np.asarray(f, dtype=np.float64)
    n = f.size
    n_up = 32 * n if n_up is None else n_up
    up = upsample_arclength(geom_or_state.s_alpha, n_up)
    return arclength_coeffs_up(sp.resample(f, n_up), up, k_max, eps_rel)


def to_uniform_samples(spec: Spectrum) -> FloatArray:
    """Samples at s_l = l L_p / M from M centered coefficients (Nyquist dropped)."""
    c = spec.coeffs.copy()
    c[0] = 0.0
    return sp.inverse(Spectrum(c))


def analytic_envelope(f_uniform) -> FloatArray:
    """Regularized envelope sqrt(1 + f^2 + H[f]^2)."""
    f = np.asarray(f_uniform, dtype=np.float64)
    hf = sp.hilbert(f)
    return np.sqrt(1.0 + f * f + hf * hf)


def sample_at_arclength(uniform: FloatArray, s_nodes: FloatArray, L_p: float,
                        eps_rel: float = 1e-15) -> FloatArray:
    """Band-limited evaluation of uniform-in-s samples at arbitrary s (type-2 NUFFT)."""
    spec = sp.forward(uniform)
    c = spec.coeffs.copy()
    c[0] = 0.0
    plan = nufft.NufftPlan(eps_rel, uniform.size)
    return nufft.type2_real(c, 2.0 * np.pi * s_nodes / L_p, plan)


def build_guideline(state: CurveState, geom: DerivedGeometry, params: GuidelineParams) -> Guideline:
    p = params.resolved(state.n)
    up = upsample_arclength(state.s_alpha, p.N_up)
    kz_up = sp.resample(geom.kappa_z, p.N_up)
    spec = arclength_coeffs_up(kz_up, up, p.k_max, p.eps_rel)
    kz_u = to_uniform_samples(spec)
    env = analytic_envelope(kz_u)
    gl_u = sp.gaussian_filter(env, p.a, up.L_p)
    gl = sample_at_arclength(gl_u, geom.s, up.L_p, p.eps_rel)
    if np.any(gl <= 0.0):
        raise ValueError("guideline is not strictly positive")
    return Guideline(gl_at_nodes=gl, gl_uniform=gl_u)


def ramp(t: float, d: float) -> float:
    return float(np.exp(-d * t * t))


def build_R(gl: Guideline | FloatArray, t: float, params: GuidelineParams) -> RFunction:
    """R = (1-dR) {(1 - e^{-d t^2}) R_e + e^{-d t^2} / pi} + dR / pi,
    with R_e = GL^{-1} normalized to unit integral over [0, pi]."""
    g = gl.gl_at_nodes if isinstance(gl, Guideline) else np.asarray(gl, dtype=np.float64)
    if np.any(g <= 0.0):
        raise ValueError("guideline must be strictly positive")
    inv = 1.0 / g
    # GL is even about pi, so the [0, pi] integral is half the periodic one
    r_e = inv / (np.pi * np.mean(inv))
    w = ramp(t, params.d)
    dr = params.delta_R
    R = (1.0 - dr) * ((1.0 - w) * r_e + w / np.pi) + dr / np.pi
    return RFunction(R=R)


def length_rate(theta_alpha: FloatArray, U: FloatArray) -> float:
    """dL/dt = -int_0^pi theta_alpha U d alpha."""
    return float(-np.pi * np.mean(theta_alpha * U))


def tangential_velocity(state: CurveState, geom: DerivedGeometry, U: FloatArray,
                        R_now: RFunction | FloatArray, R_past: FloatArray | None,
                        tau: float | None) -> FloatArray:
    """V(alpha) = int_0^alpha (R_t L + R dL/dt + theta_alpha U) d alpha'.

    ``R_past=None`` selects the t = 0 branch (dR/dt = 0).  The backward
    difference (R_now - R_past)/tau is projected to zero mean so that
    V(0) = V(pi) = 0 exactly.
    """
    R = R_now.R if isinstance(R_now, RFunction) else np.asarray(R_now, dtype=np.float64)
    if R_past is None:
        r_t = np.zeros_like(R)
    else:
        if tau is None or not tau > 0.0:
            raise ValueError("delay tau must be positive")
        r_t = (R - np.asarray(R_past, dtype=np.float64)) / tau
        r_t = r_t - np.mean(r_t)
    ta = geom.theta_alpha
    ta_u = ta * U
    l_t = length_rate(ta, U)
    V = sp.antiderivative_from_zero(r_t * geom.L + R * l_t + ta_u)
    # odd about pi: remove round-off in the even part
    j = (-np.arange(state.n)) % state.n
    return 0.5 * (V - V[j])


def uniform_V(theta_alpha: FloatArray, U: FloatArray) -> FloatArray:
    """Explicit V for the uniform parametrization R = 1/pi."""
    n = U.size
    f = theta_alpha * U
    return -sp.grid(n) / np.pi * (np.pi * np.mean(f)) + sp.antiderivative_from_zero(f)
