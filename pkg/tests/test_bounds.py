import math

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from fermitrap import bounds
from fermitrap.thermal_states import ModelParams, maxwell_boltzmann, solve_chemical_potential


def test_theta_examples():
    assert bounds.theta(0) == 1
    assert bounds.theta(1) == pytest.approx((math.e**2 - 1) / (math.e**2 + 1), rel=1e-15)
    assert bounds.theta(1) == pytest.approx(0.761594, abs=1e-6)
    assert 0.999 < 50 * bounds.theta(50) <= 1
    with pytest.raises(ValueError):
        bounds.theta(-1)


@given(st.floats(0, 40), st.floats(1e-6, 5))
def test_theta_decreasing(x, dx):
    assert bounds.theta(x + dx) < bounds.theta(x) or bounds.theta(x) == bounds.theta(x + dx) == 0
    assert 0 < bounds.theta(x) <= 1


def test_series_branch_continuous():
    x = 1e-4
    assert bounds.theta(x * (1 - 1e-9)) == pytest.approx(math.tanh(x) / x, rel=1e-15)


def test_constants():
    assert bounds.main_constant(2, math.inf) == pytest.approx(2**1.25)
    assert bounds.moment_constant(3, 2) == pytest.approx(1.5)
    f = bounds.main_constant_factors(3, 2)
    assert f["C_d1p"] == pytest.approx(math.sqrt(1.5))
    assert f["C_dp"] == pytest.approx(f["two_power"] * f["C_d1p"] * f["pi_power"])


def test_rhs_beta_scaling_classical():
    # Z_mu ~ (2 pi / beta)^d in the classical regime, so rhs ~ beta^{1/2 + d/p'}
    d, p, hbar = 2, 4.0, 1e-6
    vals = []
    for beta in (1.0, 2.0):
        pr = ModelParams(d=d, hbar=hbar, beta=beta)
        Z = (2 * math.pi / beta) ** d
        vals.append(bounds.rhs_main_bound(pr, p, Z))
    assert vals[1] / vals[0] == pytest.approx(2 ** (0.5 + d * (1 - 1 / p)), rel=1e-5)


@pytest.fixture(scope="module")
def profile():
    return solve_chemical_potential(ModelParams(d=1, hbar=0.5, beta=1.0, lam=1.0))


@pytest.mark.parametrize("p", [2.0, 4.0, math.inf])
def test_main_and_linf(profile, p):
    rep = bounds.main_bound(profile, p)
    assert rep.passed and rep.ratio >= 0
    linf = bounds.linf_proposition(profile)
    assert linf.passed
    if math.isinf(p):
        assert rep.lhs == linf.lhs


def test_sandwich_and_mu(profile):
    lower, upper = bounds.fugacity_sandwich(profile)
    assert lower.passed and upper.passed and upper.slack == 0
    assert set(lower.details) >= {"lambda_pi", "lambda_2pi", "density", "branch"}
    low = solve_chemical_potential(ModelParams(d=2, hbar=0.05, beta=1.0, lam=1e-3))
    consts = bounds.fugacity_constants(low)
    assert consts["branch"] == "low" and consts["lambda_pi"] == 2.0
    assert all(r.passed for r in bounds.fugacity_sandwich(low))
    hi = solve_chemical_potential(ModelParams(d=1, hbar=0.1, beta=2.0, lam=2 * math.pi))
    rep = bounds.mu_upper_bound(hi)
    assert rep is not None and rep.passed
    assert bounds.mu_upper_bound(low) is None
    with pytest.raises(ValueError):
        bounds.fugacity_sandwich(maxwell_boltzmann(low.params))


def test_sqrt_lemma(profile):
    for q, r in ((4, 4), (2, math.inf)):
        assert bounds.sqrt_lemma(profile, 2, q, r).passed
    with pytest.raises(ValueError):
        bounds.sqrt_lemma(profile, 2, 3, 3)


@pytest.mark.parametrize("p", [2.0, math.inf])
def test_split_integral(profile, p):
    assert bounds.split_integral(profile, p).passed


def test_mb_variants():
    mb = maxwell_boltzmann(ModelParams(d=2, hbar=0.2, beta=2.0))
    assert bounds.main_bound(mb, 2.0).bound_id == "main_mb"
    assert bounds.main_bound(mb, 2.0).passed
    assert bounds.linf_proposition(mb).passed


@pytest.mark.parametrize("n", [1, 2, 4])
def test_weight_lemma(n):
    rep = bounds.linf_weight_bound(1.0, 0.5, n, K=400)
    assert rep.passed
    x = bounds.weighted_gaussian_norm(1.0, 0.5, n, 400, "x")
    p = bounds.weighted_gaussian_norm(1.0, 0.5, n, 400, "p")
    assert x == pytest.approx(p, rel=1e-9)


def test_weight_lemma_classical_sanity():
    beta, n = 1.0, 2
    op = bounds.weighted_gaussian_norm(beta, 1e-3, n, K=400)
    rhs = (n * max(2 / beta, math.sqrt(2) * 1e-3)) ** (n / 2)
    assert bounds.classical_weight_max(beta, n) <= rhs
    assert op <= rhs


def test_classical_reference_norm():
    beta = 1.3
    c = bounds.classical_reference_norm(1, beta, math.inf)
    Z = 2 * math.pi / beta
    assert c.value == pytest.approx(2 * beta / Z * math.exp(-0.5) / math.sqrt(2 * beta))
    for d, p in ((1, 2.0), (2, 2.0), (2, 4.0)):
        a = bounds.classical_reference_norm(d, 1.0, p).value
        b = bounds.classical_reference_norm(d, 2.0, p).value
        assert b / a == pytest.approx(2 ** (0.5 + d * (1 - 1 / p)), rel=1e-6)
    # the Gamma-function form misses a factor d inside the p-th root
    c = bounds.classical_reference_norm(2, 1.0, 2.0)
    assert c.formula_ratio == pytest.approx(math.sqrt(2), rel=1e-10)
    with pytest.raises(ValueError):
        bounds.classical_reference_norm(1, 1.0, 0.5)


def test_report_fields():
    rep = bounds.BoundReport(None, 2.0, 1.0, 2.0, "x")
    assert rep.ratio == 0.5 and rep.passed and rep.slack == 1e-9
    assert not bounds.BoundReport(None, 2.0, 2.0, 1.0, "x").passed
    assert bounds.BoundReport(None, 2.0, 1.0 + 1e-10, 1.0, "x").passed


@settings(max_examples=15, deadline=None)
@given(st.integers(1, 3), st.floats(0.25, 16), st.floats(0.02, 0.8), st.floats(0.1, 6.3))
def test_main_bound_property(d, beta, hbar, lam):
    prof = solve_chemical_potential(ModelParams(d=d, hbar=hbar, beta=beta, lam=lam))
    for p in (2.0, math.inf):
        assert bounds.main_bound(prof, p).passed
    assert all(r.passed for r in bounds.fugacity_sandwich(prof))
