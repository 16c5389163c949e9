"""Phase-space side: Wigner functions of oscillator eigenstates and thermal moments.

Conventions: z = (x, xi) in R^{2d}.  The Wigner function of the one-dimensional
eigenstate |n><n| is

    f_n(z) = 2 (-1)^n e^{-|z|^2/hbar} L_n(2|z|^2/hbar),

normalized so that (1/h) int f_n dz = 1.  The thermal Maxwell-Boltzmann state
has the Gaussian Wigner function described by :class:`PhaseSpaceGaussian`.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass

import numpy as np
from scipy import integrate, sparse
from scipy.linalg import eigh_tridiagonal
from scipy.special import gammaln

from .bounds import theta
from .norms import _abs_power_d1
from .spectral_core import LadderElements
from .thermal_states import MAXWELL_BOLTZMANN, OccupationProfile


def laguerre(n: int, t):
    """L_n(t) by the three-term recurrence (k+1) L_{k+1} = (2k+1-t) L_k - k L_{k-1}."""
    if n < 0:
        raise ValueError("Laguerre degree must be nonnegative")
    t = np.asarray(t, dtype=float)
    prev = np.ones_like(t)
    if n == 0:
        return prev
    cur = 1.0 - t
    for k in range(1, n):
        prev, cur = cur, ((2 * k + 1 - t) * cur - k * prev) / (k + 1)
    return cur


def eigen_wigner(n: int, hbar: float, x, xi):
    """Wigner function of the n-th one-dimensional eigenstate at (x, xi)."""
    r2 = np.asarray(x, dtype=float) ** 2 + np.asarray(xi, dtype=float) ** 2
    sign = -1.0 if n % 2 else 1.0
    return 2 * sign * np.exp(-r2 / hbar) * laguerre(n, 2 * r2 / hbar)


def wigner_generating_closed(t: float, hbar: float, x, xi):
    """sum_n t^n f_n(z) = 2/(1+t) exp(-(|z|^2/hbar)(1-t)/(1+t)) for |t| < 1."""
    r2 = np.asarray(x, dtype=float) ** 2 + np.asarray(xi, dtype=float) ** 2
    return 2 / (1 + t) * np.exp(-(r2 / hbar) * (1 - t) / (1 + t))


def wigner_generating_series(t: float, hbar: float, x, xi, nmax: int):
    """Partial sum up to nmax and a bound on the remainder.

    Since |e^{-u/2} L_n(u)| <= 1, every |f_n| <= 2, so the tail is at most
    2 t^{nmax+1} / (1 - t).
    """
    if not 0 <= t < 1:
        raise ValueError("t must lie in [0, 1)")
    r2 = np.asarray(x, dtype=float) ** 2 + np.asarray(xi, dtype=float) ** 2
    u = 2 * r2 / hbar
    env = np.exp(-r2 / hbar)
    total = np.zeros_like(r2)
    prev, cur = np.ones_like(u), 1.0 - u
    for n in range(nmax + 1):
        Ln = prev if n == 0 else cur
        total = total + (t**n) * 2 * (-1) ** n * env * Ln
        if n >= 1:
            prev, cur = cur, ((2 * n + 1 - u) * cur - n * prev) / (n + 1)
    return total, 2 * t ** (nmax + 1) / (1 - t)


@dataclass(frozen=True)
class PhaseSpaceGaussian:
    """Wigner function of the normalized thermal state e^{-beta H} / Z.

    f(z) = (rate / (2 pi))^d exp(-rate |z|^2 / 2), rate = beta theta(beta hbar / 2),
    a probability density on R^{2d}.
    """

    d: int
    beta: float
    hbar: float

    @property
    def rate(self) -> float:
        return self.beta * theta(self.beta * self.hbar / 2)

    @property
    def prefactor(self) -> float:
        return (self.rate / (2 * math.pi)) ** self.d

    def density(self, z):
        """Evaluate at points with trailing axis of length 2d."""
        z = np.asarray(z, dtype=float)
        if z.shape[-1] != 2 * self.d:
            raise ValueError(f"points must have trailing dimension {2 * self.d}")
        return self.prefactor * np.exp(-0.5 * self.rate * np.sum(z * z, axis=-1))

    def marginal(self, x, xi):
        """Density of a single (x_i, xi_i) pair."""
        r2 = np.asarray(x, dtype=float) ** 2 + np.asarray(xi, dtype=float) ** 2
        return self.rate / (2 * math.pi) * np.exp(-0.5 * self.rate * r2)


def moment_constant(d: int, n: float) -> float:
    return math.exp(gammaln((d + n) / 2) - gammaln(d / 2))


def thermal_moment_closed(d: int, beta: float, hbar: float, n: float) -> float:
    """h^d Tr(|x|^n g_beta) = C_{d,n} / (beta theta(beta hbar/2) / 2)^{n/2}."""
    if n < 0:
        raise ValueError("only n >= 0 is implemented")
    return moment_constant(d, n) / (beta * theta(beta * hbar / 2) / 2) ** (n / 2)


def coth_moment(beta: float, hbar: float) -> float:
    """Independent closed form of <x^2> in d = 1: (hbar/2) coth(beta hbar / 2)."""
    return 0.5 * hbar / math.tanh(0.5 * beta * hbar)


def _one_dim_even_moments(K: int, hbar: float, amax: int, which: str = "x") -> np.ndarray:
    """diag((q^{2a})) on levels 0..K for a = 0..amax, with q = x or p.

    Powers are formed on a space padded by amax levels so the diagonal on
    levels <= K is exact; sparse banded products keep this linear in K.
    """
    size = K + amax + 1
    lad = LadderElements(hbar)
    off = lad.offdiag(np.arange(size - 1))
    if which == "x":
        Q = sparse.diags([off, off], [1, -1], format="csr")
    elif which == "p":
        Q = sparse.diags([-1j * off, 1j * off], [1, -1], format="csr")
    else:
        raise ValueError(which)
    out = np.empty((amax + 1, K + 1))
    out[0] = 1.0
    M = sparse.identity(size, format="csr")
    for a in range(1, amax + 1):
        M = Q @ M
        # diag(Q^{2a}) = column norms of Q^a (Q Hermitian)
        col = np.asarray(abs(M).power(2).sum(axis=0)).ravel()
        out[a] = col[:K + 1]
    return out


def _abs_power_x_d1(K: int, hbar: float, n: float) -> np.ndarray:
    off = LadderElements(hbar).offdiag(np.arange(K))
    w, V = eigh_tridiagonal(np.zeros(K + 1), off)
    return (V * np.abs(w) ** n) @ V.T


def thermal_moment_spectral(profile: OccupationProfile, n: float, which: str = "x") -> float:
    """h^d Tr(|q|^n rho) for a Maxwell-Boltzmann profile, q = x or p.

    d = 1 uses functional calculus on the truncated matrix (any n >= 0).
    d >= 2 needs even n: |q|^n = (sum_i q_i^2)^{n/2} is expanded multinomially
    and each factor is a one-dimensional moment of the product Gibbs state at
    the same cutoff.
    """
    if profile.kind != MAXWELL_BOLTZMANN:
        raise ValueError("moments are defined against the Maxwell-Boltzmann state")
    if n < 0:
        raise ValueError("n must be nonnegative")
    if which not in ("x", "p"):
        raise ValueError(which)
    if n == 0:
        return 1.0
    sh = profile.shells
    pr = profile.params
    if sh.d == 1:
        if which == "x":
            W = _abs_power_x_d1(sh.K, sh.hbar, n)
        else:
            W = _abs_power_d1(sh.K, sh.hbar, n)
        return sh.h * math.fsum(np.diag(W) * profile.rho)
    if n % 2:
        raise ValueError("d >= 2 moments need an even exponent")
    a_tot = int(n) // 2
    diag = _one_dim_even_moments(sh.K, sh.hbar, a_tot, which)
    w1 = np.exp(-pr.beta * sh.hbar * (np.arange(sh.K + 1) + 0.5))
    w1 /= w1.sum()
    one_dim = diag @ w1
    total = 0.0
    for parts in _compositions(a_tot, sh.d):
        coef = math.factorial(a_tot)
        term = 1.0
        for a in parts:
            coef //= math.factorial(a)
            term *= one_dim[a]
        total += coef * term
    return total


def _compositions(total, d):
    for cut in itertools.combinations(range(total + d - 1), d - 1):
        edges = (-1,) + cut + (total + d - 1,)
        yield tuple(edges[i + 1] - edges[i] - 1 for i in range(d))


def _gh_tensor_moment(g: PhaseSpaceGaussian, n: int, order: int) -> float:
    # nodes for the weight e^{-rate t^2 / 2} after rescaling
    t, w = np.polynomial.hermite.hermgauss(order)
    s = t * math.sqrt(2 / g.rate)
    w = w / math.sqrt(math.pi)
    D = 2 * g.d
    grids = np.meshgrid(*([s] * D), indexing="ij")
    weights = np.ones([order] * D)
    for k in range(D):
        shape = [1] * D
        shape[k] = order
        weights = weights * w.reshape(shape)
    r2 = sum(grids[k] ** 2 for k in range(g.d))
    return float(np.sum(weights * r2 ** (n / 2)))


def phase_space_moment(g: PhaseSpaceGaussian, n: float, tol: float = 1e-12,
                       max_order: int = 64) -> float:
    """int |x|^n f(z) dz by quadrature.

    Even integer n: tensor Gauss-Hermite over all 2d coordinates, doubling
    the order until two successive values agree.  Otherwise the |x|-part is
    integrated radially by adaptive quadrature and the xi-part by
    Gauss-Hermite.
    """
    if float(n).is_integer() and int(n) % 2 == 0:
        order, prev = 2, None
        while order <= max_order:
            val = _gh_tensor_moment(g, int(n), order)
            if prev is not None and abs(val - prev) <= tol * abs(val):
                return val
            prev, order = val, order * 2
        raise ArithmeticError("Gauss-Hermite moments did not converge")
    d, c = g.d, g.rate
    sphere = 2 * math.pi ** (d / 2) / math.gamma(d / 2)
    radial, _ = integrate.quad(lambda r: r ** (n + d - 1) * math.exp(-0.5 * c * r * r),
                               0, math.inf, epsabs=0, epsrel=tol, limit=200)
    x_part = (c / (2 * math.pi)) ** (d / 2) * sphere * radial
    t, w = np.polynomial.hermite.hermgauss(4)
    xi_part = (float(np.sum(w)) / math.sqrt(math.pi)) ** d
    return x_part * xi_part
