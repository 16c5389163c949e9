"""Right-hand sides of the regularity estimates and pass/fail records.

Every check produces a :class:`BoundReport` with ``ratio = lhs / rhs``; a
check passes when ``ratio <= 1 + slack``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy import integrate
from scipy.linalg import eigh_tridiagonal
from scipy.special import gammaln

from .gradients import ShellBlocks, commutator_blocks, sqrt_gradient_blocks
from .norms import _abs_power_d1, blocks_schatten_norm, diagonal_schatten_norm
from .spectral_core import LadderElements
from .thermal_states import (
    FERMI_DIRAC,
    ModelParams,
    OccupationProfile,
    partition_closed,
)

DEFAULT_SLACK = 1e-9


@dataclass(frozen=True)
class BoundReport:
    params: ModelParams | None
    p: float
    lhs: float
    rhs: float
    bound_id: str
    slack: float = DEFAULT_SLACK
    details: dict = field(default_factory=dict)

    def __post_init__(self):
        for name in ("p", "lhs", "rhs", "slack"):
            object.__setattr__(self, name, float(getattr(self, name)))
        if self.lhs < 0 or self.rhs < 0:
            raise ValueError(f"{self.bound_id}: negative side (lhs={self.lhs}, rhs={self.rhs})")

    @property
    def ratio(self) -> float:
        if self.rhs == 0:
            return 0.0 if self.lhs == 0 else math.inf
        return self.lhs / self.rhs

    @property
    def passed(self) -> bool:
        return math.isfinite(self.ratio) and self.ratio <= 1.0 + self.slack


def theta(x: float) -> float:
    """tanh(x)/x with theta(0) = 1."""
    if x < 0:
        raise ValueError("theta is defined for x >= 0")
    if x < 1e-4:
        x2 = x * x
        return 1.0 - x2 / 3.0 + 2.0 * x2 * x2 / 15.0
    return math.tanh(x) / x


def moment_constant(d: int, n: float) -> float:
    """Gamma((d+n)/2) / Gamma(d/2)."""
    return math.exp(gammaln((d + n) / 2) - gammaln(d / 2))


def main_constant_factors(d: int, p: float) -> dict:
    """Factors of C_{d,p} = 2^{5/4 + (2d+1)/p} * C_{d,1,p} * pi^{d/p},
    with C_{d,1,p} = (Gamma((d+2)/2)/Gamma(d/2))^{1/p} = (d/2)^{1/p}."""
    inv = 0.0 if math.isinf(p) else 1.0 / p
    two = 2.0 ** (1.25 + (2 * d + 1) * inv)
    cd1p = moment_constant(d, 2) ** inv
    pi_pow = math.pi ** (d * inv)
    return {"two_power": two, "C_d1p": cd1p, "pi_power": pi_pow, "C_dp": two * cd1p * pi_pow}


def main_constant(d: int, p: float) -> float:
    return main_constant_factors(d, p)["C_dp"]


def rhs_main_bound(params: ModelParams, p: float, Z: float, constant_scale: float = 1.0) -> float:
    """C_{d,p} beta^{1/2 - d/p} / Z * max(2 sqrt 2, beta hbar)^{1/2 - 1/p} / theta(beta hbar)^{1/p}.

    ``Z`` is Z_mu for the Fermi-Dirac state and Z_beta for Maxwell-Boltzmann.
    """
    d, beta, hbar = params.d, params.beta, params.hbar
    inv = 0.0 if math.isinf(p) else 1.0 / p
    return (constant_scale * main_constant(d, p) * beta ** (0.5 - d * inv) / Z
            * max(2 * math.sqrt(2), beta * hbar) ** (0.5 - inv) / theta(beta * hbar) ** inv)


def _reference_Z(profile: OccupationProfile) -> float:
    if profile.kind == FERMI_DIRAC:
        return profile.Z_mu
    pr = profile.params
    return partition_closed(pr.d, pr.beta, pr.hbar)


def main_bound(profile: OccupationProfile, p: float, slack: float = DEFAULT_SLACK,
               constant_scale: float = 1.0, blocks=None) -> BoundReport:
    """||D rho||_{L^p} against the main estimate (per gradient component)."""
    pr = profile.params
    if blocks is None:
        blocks = commutator_blocks(profile)
    lhs = blocks_schatten_norm(blocks, p, pr.schatten_dim)
    Z = _reference_Z(profile)
    rhs = rhs_main_bound(pr, p, Z, constant_scale)
    details = dict(main_constant_factors(pr.d, p), Z=Z, constant_scale=constant_scale)
    bid = "main" if profile.kind == FERMI_DIRAC else "main_mb"
    return BoundReport(pr, p, lhs, rhs, bid, slack, details)


def linf_proposition(profile: OccupationProfile, slack: float = DEFAULT_SLACK,
                     blocks=None) -> BoundReport:
    """||D rho||_{L^inf} <= (2/Z) max(sqrt(beta), beta sqrt(hbar))."""
    pr = profile.params
    if blocks is None:
        blocks = commutator_blocks(profile)
    lhs = blocks_schatten_norm(blocks, math.inf)
    Z = _reference_Z(profile)
    rhs = 2.0 / Z * max(math.sqrt(pr.beta), pr.beta * math.sqrt(pr.hbar))
    bid = "linf_prop" if profile.kind == FERMI_DIRAC else "linf_prop_mb"
    return BoundReport(pr, math.inf, lhs, rhs, bid, slack, {"Z": Z})


def fugacity_constants(profile: OccupationProfile) -> dict:
    """The three candidate forms of C_{lambda,beta}.

    Below mu = d hbar / 2 all of them equal 2.  Above it they are
    1 + e^{beta lambda^{1/d}/pi} ("lambda_pi"), 1 + e^{beta lambda^{1/d}/(2 pi)}
    ("lambda_2pi") and 1 + e^{2 beta hbar N^{1/d}} ("density").
    """
    pr = profile.params
    d, beta = pr.d, pr.beta
    if profile.mu <= d * pr.hbar / 2:
        return {"branch": "low", "lambda_pi": 2.0, "lambda_2pi": 2.0, "density": 2.0}
    root = pr.lam ** (1.0 / d)

    def one_plus_exp(x):
        return math.inf if x > 700 else 1.0 + math.exp(x)

    return {
        "branch": "high",
        "lambda_pi": one_plus_exp(beta * root / math.pi),
        "lambda_2pi": one_plus_exp(beta * root / (2 * math.pi)),
        "density": one_plus_exp(2 * beta * pr.hbar * pr.N ** (1.0 / d)),
    }


def fugacity_sandwich(profile: OccupationProfile, slack: float = DEFAULT_SLACK):
    """(lower, upper) reports for Z_beta / C <= Z_mu <= Z_beta.

    The lower check uses the weakest (largest) candidate C; the upper check
    has zero slack.
    """
    if profile.kind != FERMI_DIRAC:
        raise ValueError("the fugacity sandwich needs a Fermi-Dirac profile")
    pr = profile.params
    Z_beta = partition_closed(pr.d, pr.beta, pr.hbar)
    consts = fugacity_constants(profile)
    C = max(v for k, v in consts.items() if k != "branch")
    info = dict(consts, Z_beta=Z_beta, Z_mu=profile.Z_mu, mu=profile.mu)
    lower = BoundReport(pr, math.nan, Z_beta / C, profile.Z_mu, "sandwich_lower", slack, info)
    upper = BoundReport(pr, math.nan, profile.Z_mu, Z_beta, "sandwich_upper", 0.0, info)
    return lower, upper


def mu_upper_bound(profile: OccupationProfile, slack: float = DEFAULT_SLACK) -> BoundReport | None:
    """mu <= 2 N^{1/d} hbar + d hbar / 2, asserted only when mu >= d hbar / 2.

    The derivation assumes N >= 1; the report records N so a failure with
    N < 1 is distinguishable.
    """
    pr = profile.params
    if profile.mu < pr.d * pr.hbar / 2:
        return None
    rhs = 2 * pr.N ** (1.0 / pr.d) * pr.hbar + pr.d * pr.hbar / 2
    return BoundReport(pr, math.nan, profile.mu, rhs, "mu_bound", slack,
                       {"N": pr.N, "N_at_least_one": pr.N >= 1})


def sqrt_lemma(profile: OccupationProfile, p: float, q: float, r: float,
               slack: float = DEFAULT_SLACK, axis: int = 0) -> BoundReport:
    """||D sqrt(rho)||_p <= ||D sqrt(G_mu)||_p + (lambda/2) ||sqrt(rho)||_q ||D G_mu||_r."""
    if profile.kind != FERMI_DIRAC:
        raise ValueError("the square-root lemma concerns the Fermi-Dirac state")
    inv = lambda t: 0.0 if math.isinf(t) else 1.0 / t  # noqa: E731
    if abs(inv(p) - inv(q) - inv(r)) > 1e-12:
        raise ValueError("exponents must satisfy 1/p = 1/q + 1/r")
    pr = profile.params
    sh = profile.shells
    dim = pr.schatten_dim
    gibbs = np.exp(profile.log_gibbs)
    lhs = blocks_schatten_norm(sqrt_gradient_blocks(profile, axis=axis), p, dim)
    t1 = blocks_schatten_norm(sqrt_gradient_blocks(gibbs, sh, axis=axis), p, dim)
    t2 = diagonal_schatten_norm(np.sqrt(profile.rho), sh, q, dim)
    t3 = blocks_schatten_norm(commutator_blocks(gibbs, sh, axis=axis), r, dim)
    rhs = t1 + 0.5 * pr.lam * t2 * t3
    return BoundReport(pr, p, lhs, rhs, f"sqrt_lemma_q{_fmt(q)}_r{_fmt(r)}", slack,
                       {"D_sqrt_G": t1, "sqrt_rho_q": t2, "D_G_r": t3, "q": q, "r": r})


def _fmt(v):
    return "inf" if math.isinf(v) else f"{v:g}"


def position_gaussian_blocks(profile: OccupationProfile, s: float) -> ShellBlocks:
    """Block family of x e^{-s beta H} along one axis (not symmetric)."""
    sh = profile.shells
    G = np.exp(-s * profile.params.beta * sh.energies)
    coupling = LadderElements(sh.hbar).offdiag(np.arange(sh.K))
    return ShellBlocks(sh, coupling, G[1:], G[:-1])


def split_integral(profile: OccupationProfile, p: float, order: int = 16,
                   slack: float = DEFAULT_SLACK, blocks=None) -> BoundReport:
    """||D rho||_p <= 2 beta / Z * int_{1/2}^1 ||x e^{-s beta H}||_p ds (Gauss-Legendre in s)."""
    pr = profile.params
    dim = pr.schatten_dim
    if blocks is None:
        blocks = commutator_blocks(profile)
    lhs = blocks_schatten_norm(blocks, p, dim)
    nodes, weights = np.polynomial.legendre.leggauss(order)
    s = 0.75 + 0.25 * nodes
    vals = [blocks_schatten_norm(position_gaussian_blocks(profile, si), p, dim) for si in s]
    integral = 0.25 * float(np.dot(weights, vals))
    Z = profile.Z_mu if profile.kind == FERMI_DIRAC else profile.Z_beta
    rhs = 2 * pr.beta / Z * integral
    return BoundReport(pr, p, lhs, rhs, "split_integral", slack, {"integral": integral})


def weighted_gaussian_norm(beta: float, hbar: float, n: float, K: int = 400, which: str = "x") -> float:
    """Operator norm of |x|^n e^{-beta H} (or |p|^n e^{-beta H}) in d = 1, densely.

    |x|^n comes from the eigendecomposition of the truncated tridiagonal x;
    |p|^n from the parity blocks of p^2.
    """
    G = np.exp(-beta * (np.arange(K + 1) + 0.5) * hbar)
    if which == "x":
        off = LadderElements(hbar).offdiag(np.arange(K))
        w, V = eigh_tridiagonal(np.zeros(K + 1), off)
        W = (V * np.abs(w) ** n) @ V.T
    elif which == "p":
        W = _abs_power_d1(K, hbar, n)
    else:
        raise ValueError(which)
    return float(np.linalg.norm(W * G[None, :], 2))


def linf_weight_bound(beta: float, hbar: float, n: float, K: int = 400,
                      slack: float = DEFAULT_SLACK, which: str = "x") -> BoundReport:
    """||\\,|x|^n e^{-beta H}||^{2/n} <= n max(2/beta, sqrt(2) hbar) in d = 1."""
    if n <= 0:
        raise ValueError("weight exponent must be positive")
    lhs = weighted_gaussian_norm(beta, hbar, n, K, which) ** (2.0 / n)
    rhs = n * max(2.0 / beta, math.sqrt(2) * hbar)
    tail = math.exp(-beta * (K + 0.5) * hbar)
    return BoundReport(None, math.inf, lhs, rhs, f"weight_lemma_n{_fmt(n)}", slack,
                       {"beta": beta, "hbar": hbar, "n": n, "K": K, "which": which,
                        "top_level_weight": tail})


def classical_weight_max(beta: float, n: float) -> float:
    """max_x |x|^n e^{-beta x^2} = (n / (2 e beta))^{n/2}."""
    return (n / (2 * math.e * beta)) ** (n / 2)


@dataclass(frozen=True)
class ClassicalNorm:
    value: float
    gamma_formula: float
    abserr: float

    @property
    def formula_ratio(self) -> float:
        return self.value / self.gamma_formula


def classical_reference_norm(d: int, beta: float, p: float, tol: float = 1e-12) -> ClassicalNorm:
    """|| grad (Z^-1 e^{-beta |z|^2}) ||_{L^p(R^{2d})} with Z = (2 pi / beta)^d.

    Finite p uses adaptive radial quadrature; ``gamma_formula`` evaluates the
    closed form omega_{2d} Gamma((2d+p)/2) (beta p)^{-(2d+p)/2} for comparison.
    """
    if not p >= 1:
        raise ValueError("p must be >= 1")
    Z = (2 * math.pi / beta) ** d
    pref = 2 * beta / Z
    if math.isinf(p):
        v = pref * math.exp(-0.5) / math.sqrt(2 * beta)
        return ClassicalNorm(v, v, 0.0)
    D = 2 * d
    sphere = 2 * math.pi**d / math.gamma(d)
    # r = t / sqrt(beta p) keeps the integrand O(1)
    c = math.sqrt(beta * p)
    val, err = integrate.quad(lambda t: t ** (p + D - 1) * math.exp(-t * t), 0, math.inf,
                              epsabs=0, epsrel=tol, limit=200)
    if err > 1e3 * tol * abs(val):
        raise ArithmeticError(f"radial quadrature did not reach tolerance ({err:.2e})")
    integral = sphere * val / c ** (p + D)
    ball = math.pi**d / math.gamma(d + 1)
    formula = ball * math.gamma((D + p) / 2) * (beta * p) ** (-(D + p) / 2)
    return ClassicalNorm(pref * integral ** (1 / p), pref * formula ** (1 / p),
                         pref * (err * sphere / c ** (p + D)) ** (1 / p))
