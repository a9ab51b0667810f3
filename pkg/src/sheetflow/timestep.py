"""Classical RK4 for (theta, s_alpha, gamma) with a delayed mesh density.

Stage i of a step uses the backward difference dR/dt ~ (R - R_ref)/(c_i dt)
with c = (1, 1/2, 1/2, 1).  Stage 1 reaches back to the density stored at
the previous step; stages 2-4 reach back to the density of the current
base state.  No temporal interpolation of R is needed.
"""
from __future__ import annotations

import logging
from dataclasses import dataclass, field

import numpy as np

from . import spectral as sp
from .biot_savart import SheetVelocity, principal_velocity
from .curve import CurveState, DerivedGeometry, enclosed_volume, reconstruct, symmetrize
from .meshref import GuidelineParams, build_guideline, build_R, tangential_velocity
from .spectral import FloatArray

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class StageCoeffs:
    c: tuple[float, float, float, float] = (1.0, 0.5, 0.5, 1.0)
    offsets: tuple[float, float, float, float] = (0.0, 0.5, 0.5, 1.0)
    weights: tuple[float, float, float, float] = (1 / 6, 1 / 3, 1 / 3, 1 / 6)


STAGES = StageCoeffs()


@dataclass(frozen=True)
class StepConfig:
    dt: float
    eps_K: float = 0.0
    C_cfl: float = 2.5
    M_quad: int | None = None
    guideline: GuidelineParams = field(default_factory=GuidelineParams)
    uniform_mesh: bool = False  # force R = 1/pi (no refinement)
    symmetrize: bool = True
    z_anchor: float = 0.0

    def __post_init__(self):
        if not self.dt > 0.0:
            raise ValueError("dt must be positive")
        if self.eps_K < 0.0:
            raise ValueError("eps_K must be non-negative")


class StepError(RuntimeError):
    """Raised when a step produces non-finite values; holds the last good state."""

    def __init__(self, message: str, last_good: CurveState):
        super().__init__(message)
        self.last_good = last_good


@dataclass(frozen=True)
class RhsResult:
    dtheta: FloatArray
    ds_alpha: FloatArray
    dgamma: FloatArray
    R: FloatArray
    V: FloatArray
    geom: DerivedGeometry
    velocity: SheetVelocity


@dataclass(frozen=True)
class StepDiagnostics:
    t: float
    ds_min: float
    closure: float
    volume: float
    L: float
    cfl_ratio: float
    cfl_violated: bool
    axis_drift: float
    filtered_modes: int = 0


def mesh_density(state: CurveState, geom: DerivedGeometry, cfg: StepConfig) -> FloatArray:
    if cfg.uniform_mesh:
        return np.full(state.n, 1.0 / np.pi)
    gl = build_guideline(state, geom, cfg.guideline)
    return build_R(gl, state.t, cfg.guideline).R


def rhs(state: CurveState, R_ref: FloatArray | None, tau: float | None,
        cfg: StepConfig) -> RhsResult:
    """Time derivatives of (theta, s_alpha, gamma); R_ref=None means dR/dt = 0."""
    geom = reconstruct(state, cfg.z_anchor)
    vel = principal_velocity(state, geom, cfg.M_quad)
    R = mesh_density(state, geom, cfg)
    V = tangential_velocity(state, geom, vel.U, R, R_ref, tau)
    sa = state.s_alpha
    ta = geom.theta_alpha
    dtheta = (sp.derivative(vel.U) + V * ta) / sa
    ds_alpha = sp.derivative(V) - ta * vel.U
    kappa = geom.kappa_z + geom.kappa_r
    dgamma = -state.sigma * sp.derivative(kappa) + sp.derivative((V - vel.Wt) * state.gamma / sa)
    return RhsResult(dtheta, ds_alpha, dgamma, R, V, geom, vel)


def _advance(state: CurveState, k: RhsResult, h: float, t: float) -> CurveState:
    return CurveState(t, state.theta + h * k.dtheta, state.s_alpha + h * k.ds_alpha,
                      state.gamma + h * k.dgamma, state.sigma)


def cfl_ratio(dt: float, ds_min: float, C: float) -> float:
    """dt / (C ds_min^{3/2}); values above 1 violate the stability bound."""
    return float(dt / (C * ds_min**1.5))


def post_process(state: CurveState, cfg: StepConfig) -> tuple[CurveState, int]:
    """Krasny filter on theta - alpha, s_alpha, gamma, then the symmetry projection.

    Also returns the number of Fourier modes the filter removed.
    """
    removed = 0
    if cfg.eps_K > 0.0:
        removed = sum(sp.count_below(f, cfg.eps_K) for f in (state.phi, state.s_alpha, state.gamma))
        phi = sp.krasny_filter(state.phi, cfg.eps_K)
        sa = sp.krasny_filter(state.s_alpha, cfg.eps_K)
        g = sp.krasny_filter(state.gamma, cfg.eps_K)
        state = CurveState.from_periodic(state.t, phi, sa, g, state.sigma)
    if cfg.symmetrize:
        state = symmetrize(state)
    return state, removed


def rk4_step(state: CurveState, R_prev_step: FloatArray | None, cfg: StepConfig):
    """One RK4 step.  Returns (new state, R at the base time, diagnostics).

    ``R_prev_step`` is the density returned by the previous step (None on
    the first step, where dR/dt = 0 is used in stage 1).
    """
    dt = cfg.dt
    c = STAGES.c
    t0 = state.t
    try:
        k1 = rhs(state, R_prev_step, c[0] * dt if R_prev_step is not None else None, cfg)
    except (ValueError, ArithmeticError) as exc:
        raise StepError(f"step from t={t0:.6g} failed: {exc}", state) from exc
    R0 = k1.R
    ratio = cfl_ratio(dt, k1.geom.ds_min, cfg.C_cfl)
    if ratio > 1.0:
        log.warning("CFL bound exceeded at t=%.6g: dt/(C ds_min^1.5) = %.3g", t0, ratio)
    try:
        s2 = _advance(state, k1, 0.5 * dt, t0 + 0.5 * dt)
        k2 = rhs(s2, R0, c[1] * dt, cfg)
        s3 = _advance(state, k2, 0.5 * dt, t0 + 0.5 * dt)
        k3 = rhs(s3, R0, c[2] * dt, cfg)
        s4 = _advance(state, k3, dt, t0 + dt)
        k4 = rhs(s4, R0, c[3] * dt, cfg)
    except (ValueError, ArithmeticError) as exc:
        raise StepError(f"step from t={t0:.6g} failed: {exc}", state) from exc
    w = STAGES.weights

    def combine(name):
        return sum(wi * getattr(k, name) for wi, k in zip(w, (k1, k2, k3, k4)))

    new = CurveState(t0 + dt, state.theta + dt * combine("dtheta"),
                     state.s_alpha + dt * combine("ds_alpha"),
                     state.gamma + dt * combine("dgamma"), state.sigma)
    if not all(np.all(np.isfinite(a)) for a in (new.theta, new.s_alpha, new.gamma)):
        raise StepError(f"non-finite values after step from t={t0:.6g}", state)
    new, removed = post_process(new, cfg)
    try:
        geom = reconstruct(new, cfg.z_anchor)
    except ValueError as exc:
        raise StepError(f"degenerate curve after step from t={t0:.6g}: {exc}", state) from exc
    diag = StepDiagnostics(t=new.t, ds_min=geom.ds_min, closure=geom.closure_residual,
                           volume=enclosed_volume(geom), L=geom.L, cfl_ratio=ratio,
                           cfl_violated=ratio > 1.0, axis_drift=geom.axis_drift,
                           filtered_modes=removed)
    return new, R0, diag


def integrate(state: CurveState, cfg: StepConfig, t_end: float, R_prev: FloatArray | None = None,
              callback=None):
    """Step until t_end (the last step is not shortened; n = round(t/dt)).

    ``callback(step_index, state, R, diag)`` is called after every step and
    may return True to stop early.  Returns (state, R_prev, step count).
    """
    n_steps = int(round((t_end - state.t) / cfg.dt))
    for i in range(n_steps):
        state, R_prev, diag = rk4_step(state, R_prev, cfg)
        if callback is not None and callback(i + 1, state, R_prev, diag):
            return state, R_prev, i + 1
    return state, R_prev, n_steps
