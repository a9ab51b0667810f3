import mpmath as mp
import numpy as np
import pytest

from sheetflow.biot_savart import elliptic_ke

mp.mp.dps = 30


def test_m_zero():
    K, E = elliptic_ke(0.0)
    assert K == np.pi / 2 and E == np.pi / 2


def test_limit_m_to_one():
    K, E = elliptic_ke(1.0 - 1e-12)
    assert abs(E - 1.0) < 1e-9
    assert K > 14.0  # ~ ln(4/sqrt(1e-12))


def test_half_against_quadrature():
    K, E = elliptic_ke(0.5)
    kq = mp.quad(lambda t: 1 / mp.sqrt(1 - mp.mpf("0.5") * mp.sin(t) ** 2), [0, mp.pi / 2])
    eq = mp.quad(lambda t: mp.sqrt(1 - mp.mpf("0.5") * mp.sin(t) ** 2), [0, mp.pi / 2])
    assert K == pytest.approx(float(kq), rel=1e-15)
    assert E == pytest.approx(float(eq), rel=1e-15)
    assert K == pytest.approx(1.8540746773, abs=1e-10)
    assert E == pytest.approx(1.3506438810, abs=1e-10)


@pytest.mark.parametrize("m", [-0.1, 1.0, 1.5, np.nan])
def test_out_of_range_rejected(m):
    with pytest.raises(ValueError):
        elliptic_ke(m)


def test_array_input_and_bounds():
    m = np.linspace(0, 0.999, 200)
    K, E = elliptic_ke(m)
    assert K.shape == m.shape
    assert np.all(K >= np.pi / 2) and np.all(E > 0) and np.all(E <= np.pi / 2)
    assert np.all(np.diff(K) > 0) and np.all(np.diff(E) < 0)


def test_logarithmic_growth():
    m1 = np.array([1e-4, 1e-6, 1e-8])
    K, _ = elliptic_ke(1.0 - m1)
    assert np.allclose(K - 0.5 * np.log(16 / m1), 0.0, atol=1e-3)
