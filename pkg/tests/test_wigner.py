import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from scipy import integrate
from scipy.special import eval_laguerre

from fermitrap import wigner
from fermitrap.spectral_core import build_shell_table
from fermitrap.thermal_states import ModelParams, maxwell_boltzmann, solve_chemical_potential


@given(st.integers(0, 60), st.floats(0, 50))
def test_laguerre_recurrence(n, t):
    assert wigner.laguerre(n, t) == pytest.approx(eval_laguerre(n, t), rel=1e-9, abs=1e-9)


def test_eigen_wigner_origin():
    assert wigner.eigen_wigner(0, 0.7, 0.0, 0.0) == 2.0
    assert wigner.eigen_wigner(1, 0.7, 0.0, 0.0) == -2.0


@pytest.mark.parametrize("n", [0, 1, 2])
def test_eigen_wigner_normalized(n):
    hbar = 0.6
    val, _ = integrate.quad(lambda r: 2 * math.pi * r * wigner.eigen_wigner(n, hbar, r, 0.0),
                            0, 12, epsabs=1e-13, epsrel=1e-13, limit=200)
    assert val / (2 * math.pi * hbar) == pytest.approx(1.0, abs=1e-8)


def test_generating_function():
    t = math.exp(-0.5)
    for x, xi in ((0.0, 0.0), (0.7, -0.3), (2.0, 1.0)):
        s, tail = wigner.wigner_generating_series(t, 1.0, x, xi, 80)
        assert abs(s - wigner.wigner_generating_closed(t, 1.0, x, xi)) <= tail + 1e-14
    with pytest.raises(ValueError):
        wigner.wigner_generating_series(1.0, 1.0, 0, 0, 5)


def test_gaussian_normalization_and_limit():
    g = wigner.PhaseSpaceGaussian(2, 1.5, 0.4)
    assert g.density(np.zeros(4)) == pytest.approx(g.prefactor)
    assert wigner.phase_space_moment(g, 0) == pytest.approx(1.0, abs=1e-14)
    assert wigner.PhaseSpaceGaussian(1, 2.0, 1e-9).rate == pytest.approx(2.0)
    with pytest.raises(ValueError):
        g.density(np.zeros(3))


def test_thermal_wigner_positive():
    g = wigner.PhaseSpaceGaussian(1, 3.0, 0.9)
    pts = np.random.default_rng(0).normal(scale=3, size=(500, 2))
    assert np.all(g.density(pts) > 0)
    # eigenstates do go negative
    assert wigner.eigen_wigner(1, 1.0, 0.0, 0.0) < 0


def test_closed_moment_examples():
    assert wigner.thermal_moment_closed(1, 1.0, 1.0, 2) == pytest.approx(0.5 / math.tanh(0.5), rel=1e-14)
    assert wigner.thermal_moment_closed(1, 1.0, 1.0, 2) == pytest.approx(1.081977, abs=1e-6)
    assert wigner.thermal_moment_closed(3, 2.0, 0.3, 0) == 1.0
    # small hbar: classical Gaussian moment with density ~ e^{-beta |x|^2 / 2}
    val, _ = integrate.quad(lambda x: x**4 * math.exp(-0.5 * 2 * x * x), -np.inf, np.inf)
    norm = math.sqrt(2 * math.pi / 2)
    assert wigner.thermal_moment_closed(1, 2.0, 1e-8, 4) == pytest.approx(val / norm, rel=1e-7)


def test_spectral_moment_examples():
    mb = maxwell_boltzmann(ModelParams(d=1, hbar=1.0, beta=1.0), build_shell_table(1, 1.0, 200))
    assert wigner.thermal_moment_spectral(mb, 2) == pytest.approx(1.081977, abs=1e-6)
    assert wigner.thermal_moment_spectral(mb, 2) == pytest.approx(wigner.coth_moment(1, 1), rel=1e-8)
    assert wigner.thermal_moment_spectral(mb, 0) == 1.0
    closed4 = 3 / (1.0 * bounds_theta(0.5)) ** 2
    assert wigner.thermal_moment_spectral(mb, 4) == pytest.approx(closed4, rel=1e-7)


def bounds_theta(x):
    return math.tanh(x) / x


@pytest.mark.parametrize("d,n", [(1, 2), (1, 4), (2, 2), (2, 4), (3, 2)])
def test_spectral_x_equals_p(d, n):
    mb = maxwell_boltzmann(ModelParams(d=d, hbar=0.4, beta=1.0, tail_moment=n + 1))
    x = wigner.thermal_moment_spectral(mb, n, "x")
    p = wigner.thermal_moment_spectral(mb, n, "p")
    assert x == pytest.approx(p, rel=1e-8)
    assert x == pytest.approx(wigner.thermal_moment_closed(d, 1.0, 0.4, n), rel=1e-8)


def test_spectral_moment_errors():
    mb = maxwell_boltzmann(ModelParams(d=2, hbar=0.4, beta=1.0))
    with pytest.raises(ValueError):
        wigner.thermal_moment_spectral(mb, 3)
    with pytest.raises(ValueError):
        wigner.thermal_moment_spectral(mb, 2, "z")
    fd = solve_chemical_potential(ModelParams(d=1, hbar=0.4, beta=1.0))
    with pytest.raises(ValueError):
        wigner.thermal_moment_spectral(fd, 2)


@pytest.mark.parametrize("d", [1, 2])
@pytest.mark.parametrize("n", [0, 1, 2, 4])
def test_phase_space_moments(d, n):
    g = wigner.PhaseSpaceGaussian(d, 0.8, 0.6)
    assert wigner.phase_space_moment(g, n) == pytest.approx(
        wigner.thermal_moment_closed(d, 0.8, 0.6, n), rel=1e-7)
