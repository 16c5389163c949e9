"""Partition functions, chemical potential and per-shell occupations.

States are functions of the oscillator Hamiltonian, so everything is stored
as one eigenvalue per shell k = 0..K.  Two kinds are supported:

* ``fermi_dirac``: rho = (lambda)^-1 (1 + exp(beta (H - mu)))^-1 with mu fixed by
  h^d tr rho = 1;
* ``maxwell_boltzmann``: g = exp(-beta H) / Z_beta with the spectral Z_beta of
  the same truncated space.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field, replace

import numpy as np
from scipy.special import expit, logsumexp

from .spectral_core import ShellTable, build_shell_table, shell_multiplicity

log = logging.getLogger(__name__)

FERMI_DIRAC = "fermi_dirac"
MAXWELL_BOLTZMANN = "maxwell_boltzmann"
KINDS = (FERMI_DIRAC, MAXWELL_BOLTZMANN)

FLUSH_THRESHOLD = 1e-300
MAX_CUTOFF = 2_000_000


class TruncationError(RuntimeError):
    """The shell cutoff leaves a tail above the requested tolerance."""

    def __init__(self, message, tail=float("nan")):
        super().__init__(message)
        self.tail = tail


class ChemicalPotentialError(RuntimeError):
    """Bracketing or convergence failure of the trace-constraint solve."""


@dataclass(frozen=True)
class ModelParams:
    """Physical and numerical parameters of one configuration.

    ``lam`` is lambda = N h^d with h = 2 pi hbar; N may be non-integer.
    ``schatten_exponent`` selects the semiclassical prefactor h^(d/p) ("d") or
    the literal h^(3/p) ("3"); ``weight_zero`` selects whether the weight
    exponent n = 0 means m = I ("identity") or m = 2I ("two").
    """

    d: int
    hbar: float
    beta: float
    lam: float = 1.0
    tail_tol: float = 1e-13
    mu_tol: float = 1e-13
    tail_moment: float = 1.0
    schatten_exponent: str = "d"
    weight_zero: str = "identity"

    def __post_init__(self):
        if not isinstance(self.d, (int, np.integer)) or self.d < 1:
            raise ValueError(f"d must be a positive integer, got {self.d!r}")
        for name in ("hbar", "beta", "lam", "tail_tol", "mu_tol"):
            v = getattr(self, name)
            if not math.isfinite(v) or v <= 0:
                raise ValueError(f"{name} must be positive and finite, got {v!r}")
        if self.schatten_exponent not in ("d", "3"):
            raise ValueError("schatten_exponent must be 'd' or '3'")
        if self.weight_zero not in ("identity", "two"):
            raise ValueError("weight_zero must be 'identity' or 'two'")

    @property
    def h(self) -> float:
        return 2.0 * math.pi * self.hbar

    @property
    def N(self) -> float:
        return self.lam / self.h**self.d

    @property
    def schatten_dim(self) -> int:
        return self.d if self.schatten_exponent == "d" else 3


@dataclass(frozen=True)
class TailReport:
    K: int
    tail: float
    flushed: int = 0


@dataclass(frozen=True)
class OccupationProfile:
    """Per-shell eigenvalues of a thermal state.

    ``rho[k]`` is the eigenvalue of the state on shell k (so h^d sum g_k rho_k = 1).
    ``occ[k]`` is the level occupation: the Fermi-Dirac factor
    (1 + e^{beta(E_k - mu)})^-1, or h^d rho_k for Maxwell-Boltzmann.
    ``log_gibbs[k]`` is log of the eigenvalue of G_mu = Z_mu^-1 e^{-beta H}
    (Fermi-Dirac) or of rho itself (Maxwell-Boltzmann); it feeds the
    Duhamel path.
    """

    params: ModelParams
    kind: str
    shells: ShellTable
    occ: np.ndarray
    rho: np.ndarray
    log_gibbs: np.ndarray
    Z_beta: float
    mu: float | None = None
    Z_mu: float | None = None
    tail: TailReport = field(default_factory=lambda: TailReport(0, 0.0))

    @property
    def K(self) -> int:
        return self.shells.K

    def trace(self) -> float:
        """h^d tr of the state on the truncated space."""
        s = self.shells
        return s.h**s.d * math.fsum(s.mults * self.rho)

    def sqrt(self) -> np.ndarray:
        return np.sqrt(self.rho)


def _theta(x: float) -> float:
    return 1.0 if x == 0 else math.tanh(x) / x


def _log_shc(x: float) -> float:
    """log(sinh(x)/x) without overflow."""
    if x < 1e-4:
        return x * x / 6.0
    if x > 30:
        return x - math.log(2.0) - math.log(x) + math.log1p(-math.exp(-2 * x))
    return math.log(math.sinh(x) / x)


def log_partition_closed(d: int, beta: float, hbar: float) -> float:
    if beta <= 0 or hbar <= 0:
        raise ValueError("beta and hbar must be positive")
    return d * (math.log(2 * math.pi / beta) - _log_shc(beta * hbar / 2))


def partition_closed(d: int, beta: float, hbar: float) -> float:
    """Z_beta = (2 pi / beta)^d / shc(beta hbar / 2)^d."""
    return math.exp(log_partition_closed(d, beta, hbar))


def _geometric_tail(shells: ShellTable, log_terms_last: float, rate: float, moment: float):
    """Bound on sum_{k>K} g_k E_k^moment e^{-rate E_k + c} given the log of the K+1 term.

    Consecutive-term ratios are bounded by the value at k = K+1 since both
    g_{k+1}/g_k and (E_{k+1}/E_k)^moment decrease in k.
    """
    d, K = shells.d, shells.K
    k = K + 1
    log_q = -rate * shells.hbar + math.log((k + d) / (k + 1))
    if moment:
        log_q += moment * math.log((k + 1 + d / 2) / (k + d / 2))
    if log_q >= 0:
        return math.inf
    return math.exp(log_terms_last) / -math.expm1(log_q)


def spectral_tail(shells: ShellTable, beta: float, mu: float | None = None,
                  moment: float = 0.0) -> float:
    """Relative tail of the shell sum beyond the cutoff.

    With ``mu=None`` the sum is sum_k g_k E_k^moment e^{-beta E_k}; otherwise
    it is the Fermi-Dirac sum sum_k g_k E_k^moment (1 + e^{beta(E_k - mu)})^-1,
    whose terms are dominated by g_k E_k^moment e^{-beta(E_k - mu)} everywhere.
    """
    d, hbar, K = shells.d, shells.hbar, shells.K
    E = shells.energies
    shift = 0.0 if mu is None else mu
    E_next = (K + 1 + d / 2) * hbar
    log_next = math.log(float(shell_multiplicity(K + 1, d))) - beta * (E_next - shift)
    if moment:
        log_next += moment * math.log(E_next)
    tail = _geometric_tail(shells, log_next, beta, moment)
    weights = shells.mults * (E**moment if moment else 1.0)
    if mu is None:
        logw = np.log(weights) - beta * E
        log_total = float(logsumexp(logw))
        return tail * math.exp(-log_total) if math.isfinite(tail) else math.inf
    total = float(np.sum(weights * expit(-beta * (E - mu))))
    return tail / total


def partition_spectral(shells: ShellTable, beta: float, tail_tol: float | None = None) -> float:
    """h^d sum_k g_k e^{-beta E_k} on the truncated space.

    With ``tail_tol`` set, raises :class:`TruncationError` carrying the
    estimated relative tail when the cutoff is too small.
    """
    if tail_tol is not None:
        tail = spectral_tail(shells, beta)
        if tail > tail_tol:
            raise TruncationError(
                f"cutoff K={shells.K} leaves relative tail {tail:.3e} > {tail_tol:.1e}", tail)
    return math.exp(log_partition_spectral(shells, beta))


def log_partition_spectral(shells: ShellTable, beta: float) -> float:
    return shells.d * math.log(shells.h) + logsumexp(
        np.log(shells.mults) - beta * shells.energies)


def choose_cutoff(d: int, hbar: float, beta: float, tail_tol: float, mu: float | None = None,
                  moment: float = 0.0, start: int | None = None) -> ShellTable:
    """Smallest power-of-two-refined cutoff whose tail passes ``tail_tol``."""
    mu_eff = d * hbar / 2 if mu is None else max(mu, d * hbar / 2)
    if start is None:
        guess = (mu_eff + (math.log(1 / tail_tol) + 4 * d) / beta) / hbar
        K = max(8, int(guess))
    else:
        K = max(1, start)
    while True:
        shells = build_shell_table(d, hbar, K)
        if spectral_tail(shells, beta, mu, moment) <= tail_tol:
            return shells
        if K > MAX_CUTOFF:
            raise TruncationError(f"no cutoff below {MAX_CUTOFF} meets tail tolerance {tail_tol}")
        K *= 2


def _fermi_sum(shells: ShellTable, beta: float, mu: float) -> float:
    return float(np.sum(shells.mults * expit(-beta * (shells.energies - mu))))


def _fermi_derivative(shells: ShellTable, beta: float, mu: float) -> float:
    n = expit(-beta * (shells.energies - mu))
    return float(beta * np.sum(shells.mults * n * (1 - n)))


def _solve_mu_on(shells: ShellTable, params: ModelParams, max_iter: int = 400) -> float:
    beta, N = params.beta, params.N
    E0, EK = shells.energies[0], shells.energies[-1]
    hi = EK
    if _fermi_sum(shells, beta, hi) < N:
        raise ChemicalPotentialError(
            f"trace constraint unreachable at K={shells.K}: sum of occupations up to "
            f"E_K is below N={N:.6g} (cutoff too small or density above the degeneracy ceiling)")
    width = 50.0 / beta
    lo = E0 - width
    while _fermi_sum(shells, beta, lo) > N:
        width *= 2
        lo = E0 - width
        if width > 1e300:
            raise ChemicalPotentialError("could not bracket the chemical potential from below")
    for _ in range(max_iter):
        mid = 0.5 * (lo + hi)
        if mid <= lo or mid >= hi:
            break
        if _fermi_sum(shells, beta, mid) < N:
            lo = mid
        else:
            hi = mid
    else:
        raise ChemicalPotentialError("bisection did not converge")
    mu = 0.5 * (lo + hi)
    # Newton polish inside the bracket
    for _ in range(3):
        f = _fermi_sum(shells, beta, mu) - N
        fp = _fermi_derivative(shells, beta, mu)
        if fp <= 0:
            break
        nxt = mu - f / fp
        if not lo <= nxt <= hi or nxt == mu:
            break
        mu = nxt
    resid = abs(_fermi_sum(shells, beta, mu) - N)
    if resid > params.mu_tol * N:
        raise ChemicalPotentialError(
            f"trace residual {resid / N:.3e} above mu_tol={params.mu_tol:.1e} after convergence")
    return mu


def solve_chemical_potential(params: ModelParams, shells: ShellTable | None = None) -> OccupationProfile:
    """Fermi-Dirac profile whose chemical potential enforces h^d tr rho = 1.

    Without ``shells`` the cutoff is chosen adaptively: start from a
    zero-temperature Fermi-level estimate, solve, and double K until the
    occupation tail at the solved mu passes ``params.tail_tol``.
    """
    if shells is not None:
        if shells.d != params.d or shells.hbar != params.hbar:
            raise ValueError("shell table does not match the model parameters")
        mu = _solve_mu_on(shells, params)
        return occupations(params, shells, FERMI_DIRAC, mu=mu)

    d, hbar, beta = params.d, params.hbar, params.beta
    k_fermi = (params.N * math.factorial(d)) ** (1.0 / d)
    shells = choose_cutoff(d, hbar, beta, params.tail_tol, mu=(k_fermi + d / 2) * hbar,
                           moment=params.tail_moment)
    while True:
        try:
            mu = _solve_mu_on(shells, params)
        except ChemicalPotentialError:
            if shells.K > MAX_CUTOFF:
                raise
            shells = build_shell_table(d, hbar, 2 * shells.K)
            continue
        tail = spectral_tail(shells, beta, mu, params.tail_moment)
        if tail <= params.tail_tol:
            return occupations(params, shells, FERMI_DIRAC, mu=mu)
        if shells.K > MAX_CUTOFF:
            raise TruncationError("adaptive cutoff exceeded the hard limit", tail)
        shells = build_shell_table(d, hbar, 2 * shells.K)


def maxwell_boltzmann(params: ModelParams, shells: ShellTable | None = None) -> OccupationProfile:
    if shells is None:
        shells = choose_cutoff(params.d, params.hbar, params.beta, params.tail_tol,
                               moment=params.tail_moment)
    return occupations(params, shells, MAXWELL_BOLTZMANN)


def occupations(params: ModelParams, shells: ShellTable, kind: str, mu: float | None = None
                ) -> OccupationProfile:
    """Per-shell state eigenvalues of the requested kind.

    For ``fermi_dirac`` the chemical potential must already be solved and is
    passed as ``mu``.
    """
    if kind not in KINDS:
        raise ValueError(f"unknown state kind {kind!r}")
    beta, lam = params.beta, params.lam
    E = shells.energies
    logZ = log_partition_spectral(shells, beta)
    Z_beta = math.exp(logZ)
    hd = shells.h**shells.d
    if kind == FERMI_DIRAC:
        if mu is None:
            raise ValueError("fermi_dirac occupations need a solved chemical potential")
        occ = expit(-beta * (E - mu))
        rho = occ / lam
        log_gibbs = -beta * (E - mu) - math.log(lam)
        Z_mu = lam * math.exp(-beta * mu)
        tail = spectral_tail(shells, beta, mu, params.tail_moment)
    else:
        log_gibbs = -beta * E - logZ
        rho = np.exp(log_gibbs)
        occ = hd * rho
        Z_mu = None
        tail = spectral_tail(shells, beta, None, params.tail_moment)
    flushed = int(np.count_nonzero(rho < FLUSH_THRESHOLD))
    if flushed:
        rho = np.where(rho < FLUSH_THRESHOLD, 0.0, rho)
        occ = np.where(rho == 0.0, 0.0, occ)
    for a in (occ, rho, log_gibbs):
        a.setflags(write=False)
    return OccupationProfile(params, kind, shells, occ, rho, log_gibbs, Z_beta, mu, Z_mu,
                             TailReport(shells.K, tail, flushed))


def with_lambda(params: ModelParams, lam: float) -> ModelParams:
    return replace(params, lam=lam)
