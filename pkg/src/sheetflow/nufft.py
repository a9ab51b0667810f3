"""Type-1 and type-2 nonuniform FFTs by Gaussian gridding.

Type-1:  F[k] = sum_j f[j] exp(-i k x[j]),     k = -M/2 .. M/2-1
Type-2:  f[j] = sum_k F[k] exp(+i k x[j])

Nodes are spread onto a uniform grid oversampled by ``R`` with a truncated
periodic Gaussian, transformed by FFT, and deconvolved.  The Gaussian width
and the number of grid points touched per node follow the classic gridding
error balance exp(-pi * w * (R-1)/(R-1/2)).
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numba as nb
import numpy as np

OVERSAMPLING = 2


@dataclass(frozen=True)
class NufftPlan:
    eps_rel: float
    M: int
    R: int = OVERSAMPLING
    half_width: int = field(init=False)
    tau: float = field(init=False)

    def __post_init__(self):
        if not 1e-15 <= self.eps_rel <= 1e-2:
            raise ValueError(f"eps_rel must lie in [1e-15, 1e-2], got {self.eps_rel}")
        if self.M <= 0 or self.M % 2:
            raise ValueError(f"number of modes must be positive and even, got {self.M}")
        if self.R < 2:
            raise ValueError("oversampling factor must be at least 2")
        rate = math.pi * (self.R - 1) / (self.R - 0.5)
        # +1 absorbs the prefactor of the exponential bound
        w = int(math.ceil(math.log(1.0 / self.eps_rel) / rate)) + 1
        w = min(w, self.grid_size // 2)
        object.__setattr__(self, "half_width", w)
        tau = math.pi * w / (self.M**2 * self.R * (self.R - 0.5))
        object.__setattr__(self, "tau", tau)

    @property
    def grid_size(self) -> int:
        return self.R * self.M

    def kernel_args(self):
        """(q, c_hi, c_lo): Gaussian exponent per squared grid step and the
        node-to-grid scale mr/(2 pi) split into a double-double."""
        mr = self.grid_size
        dx = 2.0 * math.pi / mr
        q = dx * dx / (4.0 * self.tau)
        c = _grid_scale(mr)
        return q, c[0], c[1]

    def deconvolution(self) -> np.ndarray:
        """Factors 1/G(k) for k = -M/2..M/2-1, G the Gaussian's Fourier weight."""
        k = np.arange(-self.M // 2, self.M // 2, dtype=np.float64)
        return np.sqrt(np.pi / self.tau) * np.exp(k * k * self.tau)


_TWO_PI_HI = 6.283185307179586
_TWO_PI_LO = 2.4492935982947064e-16


def _grid_scale(mr: int) -> tuple[float, float]:
    """mr / (2 pi) as an unevaluated sum hi + lo (about 32 significant digits)."""
    hi = mr / _TWO_PI_HI
    # mr / (a + b) ~ mr/a * (1 - b/a) and correct the rounding of hi
    p, e = _two_prod(hi, _TWO_PI_HI)
    resid = (mr - p) - e - hi * _TWO_PI_LO
    return hi, resid / _TWO_PI_HI


def wrap_nodes(x) -> np.ndarray:
    x = np.asarray(x, dtype=np.float64)
    if not np.all(np.isfinite(x)):
        raise ValueError("nodes must be finite")
    x = np.mod(x, 2.0 * np.pi)
    x[x >= 2.0 * np.pi] = 0.0  # mod can round up to exactly 2*pi
    return x


_SPLIT = 134217729.0  # 2**27 + 1


@nb.njit(cache=True)
def _two_prod(a, b):
    p = a * b
    t = _SPLIT * a
    a_hi = t - (t - a)
    a_lo = a - a_hi
    t = _SPLIT * b
    b_hi = t - (t - b)
    b_lo = b - b_hi
    err = ((a_hi * b_hi - p) + a_hi * b_lo + a_lo * b_hi) + a_lo * b_lo
    return p, err


@nb.njit(cache=True)
def _locate(x, c_hi, c_lo):
    """Grid cell m0 and fractional offset u in [0, 1) of x*c, c = mr/(2 pi)
    held as a double-double so that u is accurate to round-off in grid units."""
    p, e = _two_prod(x, c_hi)
    e += x * c_lo
    m0 = math.floor(p)
    u = (p - m0) + e
    if u < 0.0:
        u += 1.0
        m0 -= 1.0
    elif u >= 1.0:
        u -= 1.0
        m0 += 1.0
    return int(m0), u


@nb.njit(cache=True)
def _weights(u, w, q, steps, out):
    """out[l] = exp(-q (u - (l - w + 1))^2), q = dx^2 / (4 tau).

    Fast Gaussian gridding: two exponentials per node.  Starting from the
    centre l = w - 1, neighbours differ by exp(+-2 q u) times the tabulated
    steps[k] = exp(-q (2k + 1)), so each product chain is at most w long.
    """
    c = w - 1
    out[c] = math.exp(-q * u * u)
    up = math.exp(2.0 * q * u)
    down = 1.0 / up
    for k in range(w):
        out[c + k + 1] = out[c + k] * up * steps[k]
    for k in range(c):
        out[c - k - 1] = out[c - k] * down * steps[k]


@nb.njit(cache=True)
def _spread(x, fr, fi, mr, w, q, c_hi, c_lo):
    gr = np.zeros(mr)
    gi = np.zeros(mr)
    wt = np.empty(2 * w)
    steps = np.exp(-q * (2.0 * np.arange(w) + 1.0))
    for j in range(x.size):
        m0, u = _locate(x[j], c_hi, c_lo)
        _weights(u, w, q, steps, wt)
        for l in range(2 * w):
            m = (m0 + l - w + 1) % mr
            gr[m] += fr[j] * wt[l]
            gi[m] += fi[j] * wt[l]
    return gr, gi


@nb.njit(cache=True)
def _interp(x, gr, gi, w, q, c_hi, c_lo):
    mr = gr.size
    outr = np.zeros(x.size)
    outi = np.zeros(x.size)
    wt = np.empty(2 * w)
    steps = np.exp(-q * (2.0 * np.arange(w) + 1.0))
    for j in range(x.size):
        m0, u = _locate(x[j], c_hi, c_lo)
        _weights(u, w, q, steps, wt)
        sr = 0.0
        si = 0.0
        for l in range(2 * w):
            m = (m0 + l - w + 1) % mr
            sr += gr[m] * wt[l]
            si += gi[m] * wt[l]
        outr[j] = sr
        outi[j] = si
    return outr, outi


def _check(values, nodes, n_expected=None):
    """Complex values and wrapped nodes; n_expected defaults to one value per node."""
    values = np.asarray(values, dtype=np.complex128)
    x = wrap_nodes(nodes)
    if values.ndim != 1:
        raise ValueError("values must be one-dimensional")
    n_expected = x.size if n_expected is None else n_expected
    if values.size != n_expected:
        raise ValueError(f"expected {n_expected} values, got {values.size}")
    return values, x


def type1(f, nodes, plan: NufftPlan) -> np.ndarray:
    """F[k] = sum_j f[j] exp(-i k x[j]) for k = -M/2..M/2-1 (centered order)."""
    f, x = _check(f, nodes)
    mr = plan.grid_size
    gr, gi = _spread(x, np.ascontiguousarray(f.real), np.ascontiguousarray(f.imag),
                     mr, plan.half_width, *plan.kernel_args())
    big = np.fft.fft(gr + 1j * gi) / mr
    k = np.arange(-plan.M // 2, plan.M // 2)
    return big[k % mr] * plan.deconvolution()


def type2(fhat, nodes, plan: NufftPlan) -> np.ndarray:
    """f[j] = sum_k F[k] exp(+i k x[j]); F given in centered order."""
    fhat, x = _check(fhat, nodes, plan.M)
    mr = plan.grid_size
    k = np.arange(-plan.M // 2, plan.M // 2)
    big = np.zeros(mr, dtype=np.complex128)
    big[k % mr] = fhat * plan.deconvolution()
    h = np.fft.ifft(big) * mr
    outr, outi = _interp(x, np.ascontiguousarray(h.real), np.ascontiguousarray(h.imag),
                         plan.half_width, *plan.kernel_args())
    return (outr + 1j * outi) / mr


def type2_real(fhat, nodes, plan: NufftPlan) -> np.ndarray:
    """Real part of a type-2 sum; for coefficients of a real signal."""
    return type2(fhat, nodes, plan).real


__all__ = ["NufftPlan", "type1", "type2", "type2_real", "wrap_nodes"]
