"""Neck tracking and fitting of the pinch-off scaling law r_min ~ (t_p - t)^{2/3}."""
from __future__ import annotations

from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from . import spectral as sp
from .curve import DerivedGeometry


class Neck(NamedTuple):
    r_min: float
    z_min: float
    alpha: float


class _Interp:
    """Spectral interpolant of a periodic sample vector and its derivatives."""

    def __init__(self, f):
        self.f = np.asarray(f, dtype=np.float64)
        self.df = sp.derivative(self.f)
        self.d2f = sp.second_derivative(self.f)

    def __call__(self, a, order=0):
        src = (self.f, self.df, self.d2f)[order]
        return float(sp.evaluate(src, a)[0])


def _refine_root(g: _Interp, lo: float, hi: float, tol: float = 1e-14, max_iter: int = 60) -> float:
    """Root of g' (g given as interpolant of r) in [lo, hi]: Newton, bisection fallback."""
    flo = g(lo, 1)
    a = 0.5 * (lo + hi)
    for _ in range(max_iter):
        fa = g(a, 1)
        if fa == 0.0:
            return a
        # shrink the bracket
        if np.sign(fa) == np.sign(flo):
            lo, flo = a, fa
        else:
            hi = a
        d2 = g(a, 2)
        step = fa / d2 if d2 != 0.0 else np.inf
        cand = a - step
        if not lo < cand < hi:
            cand = 0.5 * (lo + hi)
        if abs(cand - a) < tol:
            return cand
        a = cand
    return a


def track_neck(geom: DerivedGeometry) -> list[Neck]:
    """All interior local minima of r(alpha) on (0, pi), sorted by r_min."""
    r = geom.r
    n = r.size
    ri = _Interp(r)
    zi = _Interp(geom.z)
    ra = ri.df
    a = sp.grid(n)
    necks = []
    for j in range(1, n // 2 - 1):
        if ra[j] < 0.0 <= ra[j + 1]:
            a_star = _refine_root(ri, a[j], a[j + 1])
            necks.append(Neck(ri(a_star), zi(a_star), a_star))
    necks.sort(key=lambda nk: nk.r_min)
    return necks


def follow_neck(necks: list[Neck], previous_alpha: float | None, tie: float = 0.05) -> Neck | None:
    """Neck nearest in alpha to the one tracked before; initially the upper
    (largest-alpha) neck.

    Necks within `tie` of the nearest distance count as equally near and the
    upper one wins, so a neck that splits symmetrically is always followed
    along its upper branch rather than whichever branch round-off favours.
    """
    if not necks:
        return None
    if previous_alpha is None:
        return max(necks, key=lambda nk: nk.alpha)
    dist = [abs(nk.alpha - previous_alpha) for nk in necks]
    near = min(dist) + tie
    return max((nk for nk, d in zip(necks, dist) if d <= near), key=lambda nk: nk.alpha)


@dataclass(frozen=True)
class ScalingFit:
    slope: float
    intercept: float
    t_p: float
    z_p: float
    r2_r: float
    r2_z: float
    window: tuple[float, float]
    n_points: int


@dataclass(frozen=True)
class ScalingSeries:
    times: np.ndarray
    r_min: np.ndarray
    z_min: np.ndarray
    fit: ScalingFit | None = None

    def __post_init__(self):
        if np.any(np.diff(self.times) <= 0.0):
            raise ValueError("times must be strictly increasing")
        if np.any(self.r_min <= 0.0):
            raise ValueError("r_min must be positive")


def _line(x, y):
    """Least-squares y = s x + c with coefficient of determination."""
    A = np.column_stack([x, np.ones_like(x)])
    (s, c), *_ = np.linalg.lstsq(A, y, rcond=None)
    res = y - (s * x + c)
    ss = np.sum((y - y.mean()) ** 2)
    r2 = 1.0 - np.sum(res * res) / ss if ss > 0 else 1.0
    return float(s), float(c), float(r2)


def default_window(times, r_min, fraction: float = 0.3, threshold: float = 0.2) -> tuple[float, float]:
    """Last `fraction` of the samples whose r_min is below `threshold` times the first."""
    times = np.asarray(times)
    r_min = np.asarray(r_min)
    if r_min.size == 0:
        raise ValueError("no neck samples to fit")
    idx = np.flatnonzero(r_min < threshold * r_min[0])
    if idx.size == 0:
        raise ValueError("r_min never drops below the window threshold")
    sel = idx[int(np.floor((1.0 - fraction) * idx.size)):]
    return float(times[sel[0]]), float(times[sel[-1]])


def fit_scaling(series: ScalingSeries, window: tuple[float, float] | None = None,
                min_points: int = 10) -> ScalingFit:
    """Fit r_min^{3/2} linearly in t (t_p at its zero), then z_min linearly in
    (t_p - t)^{2/3} (z_p at zero abscissa)."""
    t = np.asarray(series.times, dtype=np.float64)
    r = np.asarray(series.r_min, dtype=np.float64)
    z = np.asarray(series.z_min, dtype=np.float64)
    if np.any(r <= 0.0):
        raise ValueError("r_min must be positive")
    if window is None:
        window = default_window(t, r)
    ta, tb = window
    if not tb > ta:
        raise ValueError("degenerate fit window")
    m = (t >= ta) & (t <= tb)
    if np.count_nonzero(m) < min_points:
        raise ValueError(f"fit window holds {np.count_nonzero(m)} samples, need {min_points}")
    s, c, r2r = _line(t[m], r[m] ** 1.5)
    if s >= 0.0:
        raise ValueError("r_min^{3/2} is not decreasing in the fit window")
    t_p = -c / s
    x = (t_p - t[m]) ** (2.0 / 3.0)
    _, z_p, r2z = _line(x, z[m])
    return ScalingFit(slope=s, intercept=c, t_p=t_p, z_p=z_p, r2_r=r2r, r2_z=r2z,
                      window=(float(ta), float(tb)), n_points=int(np.count_nonzero(m)))
