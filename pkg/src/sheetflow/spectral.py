"""Periodic Fourier toolbox on the uniform grid alpha_j = 2*pi*j/N.

Fourier coefficients are normalized as c(k) = (1/N) sum_j f_j exp(-i k alpha_j)
everywhere in the package.  Samples are plain float arrays; a ``Spectrum``
holds coefficients in centered order k = -N/2, ..., N/2 - 1.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from numpy.typing import NDArray

FloatArray = NDArray[np.float64]
ComplexArray = NDArray[np.complex128]


def check_grid(n: int) -> None:
    """Reject grid sizes the toolbox cannot handle (odd, zero, or < 8)."""
    if n <= 0 or n % 2:
        raise ValueError(f"grid size must be positive and even, got {n}")
    if n < 8:
        raise ValueError(f"grid size must be at least 8, got {n}")


def _samples(f) -> FloatArray:
    f = np.asarray(f, dtype=np.float64)
    if f.ndim != 1:
        raise ValueError("samples must be one-dimensional")
    check_grid(f.size)
    return f


def grid(n: int) -> FloatArray:
    check_grid(n)
    return 2.0 * np.pi * np.arange(n) / n


def wavenumbers(n: int) -> NDArray[np.int64]:
    """Integer wavenumbers in numpy FFT order."""
    return np.fft.fftfreq(n, d=1.0 / n).round().astype(np.int64)


@dataclass(frozen=True)
class Spectrum:
    coeffs: ComplexArray  # centered: index 0 <-> k = -N/2

    @property
    def n(self) -> int:
        return self.coeffs.size

    @property
    def k(self) -> NDArray[np.int64]:
        n = self.n
        return np.arange(-n // 2, n // 2)

    def __getitem__(self, k: int) -> complex:
        n = self.n
        if not -n // 2 <= k < n // 2:
            raise IndexError(k)
        return complex(self.coeffs[k + n // 2])

    def to_fft_order(self) -> ComplexArray:
        return np.fft.ifftshift(self.coeffs)

    @classmethod
    def from_fft_order(cls, c: ComplexArray) -> "Spectrum":
        return cls(np.fft.fftshift(np.asarray(c, dtype=np.complex128)))


def forward(f) -> Spectrum:
    f = np.asarray(f)
    check_grid(f.size)
    return Spectrum.from_fft_order(np.fft.fft(f) / f.size)


def inverse(spec: Spectrum, real: bool = True):
    check_grid(spec.n)
    f = np.fft.ifft(spec.to_fft_order()) * spec.n
    return f.real.copy() if real else f


def derivative(f) -> FloatArray:
    f = _samples(f)
    n = f.size
    c = np.fft.rfft(f)
    k = np.arange(c.size)
    c = 1j * k * c
    c[-1] = 0.0  # Nyquist
    return np.fft.irfft(c, n)


def second_derivative(f) -> FloatArray:
    f = _samples(f)
    n = f.size
    c = np.fft.rfft(f)
    k = np.arange(c.size)
    c = -(k * k) * c
    c[-1] = 0.0
    return np.fft.irfft(c, n)


def antiderivative_from_zero(f) -> FloatArray:
    """F(alpha_j) = integral of f from 0 to alpha_j (spectral).

    The mean contributes the linear part mean*alpha; the remainder is
    integrated mode by mode.  The Nyquist mode is dropped.
    """
    f = _samples(f)
    n = f.size
    c = np.fft.rfft(f)
    mean = c[0].real / n
    k = np.arange(c.size)
    out = np.zeros_like(c)
    out[1:-1] = c[1:-1] / (1j * k[1:-1])
    periodic = np.fft.irfft(out, n)
    return mean * grid(n) + periodic - periodic[0]


def periodic_integral(f) -> float:
    """Integral of a periodic f over [0, 2*pi] (trapezoid = spectral)."""
    f = _samples(f)
    return float(2.0 * np.pi * np.mean(f))


def resample(f, n_target: int) -> FloatArray:
    """Band-limited interpolation onto a uniform grid with n_target points.

    Downsampling truncates the spectrum: content above the new Nyquist
    frequency is discarded, so the result differs from the pointwise
    subsample of an under-resolved signal.
    """
    f = _samples(f)
    check_grid(n_target)
    n = f.size
    if n_target == n:
        return f.copy()
    c = np.fft.rfft(f)
    out = np.zeros(n_target // 2 + 1, dtype=np.complex128)
    if n_target > n:
        out[: n // 2] = c[: n // 2]
        out[n // 2] = 0.5 * c[n // 2]  # split the old Nyquist mode over +-N/2
    else:
        out[:] = c[: n_target // 2 + 1]
        out[-1] = 2.0 * c[n_target // 2].real  # fold +-n_target/2 together
    return np.fft.irfft(out, n_target) * (n_target / n)


def evaluate(f, alpha) -> FloatArray:
    """Evaluate the trigonometric interpolant of f at arbitrary points."""
    f = _samples(f)
    n = f.size
    c = np.fft.rfft(f) / n
    alpha = np.atleast_1d(np.asarray(alpha, dtype=np.float64))
    k = np.arange(1, n // 2)
    vals = 2.0 * (np.exp(1j * np.outer(alpha, k)) @ c[1:-1]).real
    return vals + c[0].real + c[-1].real * np.cos(n // 2 * alpha)


def krasny_filter(f, eps_k: float) -> FloatArray:
    """Zero every Fourier coefficient with |c(k)| < eps_k (absolute threshold)."""
    f = _samples(f)
    if eps_k < 0:
        raise ValueError("eps_k must be non-negative")
    if eps_k == 0:
        return f.copy()
    n = f.size
    c = np.fft.rfft(f)
    c[np.abs(c) / n < eps_k] = 0.0
    return np.fft.irfft(c, n)


def count_below(f, eps_k: float) -> int:
    """Number of (two-sided) modes the Krasny filter would remove."""
    f = _samples(f)
    c = np.abs(np.fft.fft(f)) / f.size
    return int(np.count_nonzero(c < eps_k))


def hilbert(f) -> FloatArray:
    """Periodic Hilbert transform: multiplier -i*sgn(k), Nyquist zeroed."""
    f = _samples(f)
    n = f.size
    c = np.fft.rfft(f)
    c = -1j * c
    c[0] = 0.0
    c[-1] = 0.0
    return np.fft.irfft(c, n)


def gaussian_multiplier(n: int, a: float, length: float) -> FloatArray:
    """Heat-kernel multiplier exp(-(2 pi k / L)^2 / (4 a^2)) in rfft order."""
    k = np.arange(n // 2 + 1)
    omega = 2.0 * np.pi * k / length
    return np.exp(-(omega * omega) / (4.0 * a * a))


def gaussian_filter(f, a: float, length: float) -> FloatArray:
    """Convolve samples on a uniform grid over [0, length] with the heat kernel
    sqrt(a^2/pi) exp(-a^2 s^2), using its exact Fourier transform."""
    f = _samples(f)
    if not a > 0:
        raise ValueError("heat-kernel sharpness a must be positive")
    if not length > 0:
        raise ValueError("period length must be positive")
    n = f.size
    c = np.fft.rfft(f) * gaussian_multiplier(n, a, length)
    return np.fft.irfft(c, n)
