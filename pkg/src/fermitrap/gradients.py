"""Quantum gradients of spectral states in the oscillator eigenbasis.

For a state f(H) and the gradients D_x = [grad, .] and D_v = [x/(i hbar), .]
along one axis, the commutator only couples n to n +- e_axis.  Grouping
multi-indices by the transverse sum r = |n|_1 - n_axis splits it into
independent tridiagonal blocks of size K - r + 1, each appearing
g_{r,d-1} times.  Block r has off-diagonal entries

    entry(r, j) = coupling[j] * upper[j + r]      (row j, column j+1)
    entry(r, j) = coupling[j] * lower[j + r]      (row j+1, column j)

so a whole family is stored through one coupling vector and one or two
per-shell profiles; blocks are materialized on demand.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np
from scipy.special import expit

from .spectral_core import LadderElements, ShellTable, multi_indices
from .thermal_states import FERMI_DIRAC, OccupationProfile

DIRECTIONS = ("x", "v")


@dataclass(frozen=True)
class ShellBlocks:
    """A family of zero-diagonal tridiagonal blocks indexed by transverse shell r."""

    shells: ShellTable
    coupling: np.ndarray
    upper: np.ndarray
    lower: np.ndarray | None = None

    @property
    def K(self) -> int:
        return self.shells.K

    @property
    def symmetric(self) -> bool:
        return self.lower is None

    @property
    def block_mult(self) -> np.ndarray:
        return self.shells.transverse_mults()

    def block(self, r: int):
        """Off-diagonals (upper, lower) of block r; both have length K - r."""
        m = self.K - r
        u = self.coupling[:m] * self.upper[r:r + m]
        if self.lower is None:
            return u, u
        return u, self.coupling[:m] * self.lower[r:r + m]

    def iter_blocks(self):
        """Yield (r, multiplicity, upper, lower) for every block with positive multiplicity."""
        mult = self.block_mult
        for r in range(self.K + 1):
            if mult[r] > 0:
                u, l = self.block(r)
                yield r, mult[r], u, l

    def dimension(self) -> float:
        r = np.arange(self.K + 1)
        return float(np.sum(self.block_mult * (self.K - r + 1)))


@dataclass(frozen=True)
class GradientBlocks(ShellBlocks):
    """Block representation of D_x or D_v applied to a spectral state.

    The 1/hbar of both gradients is folded into ``coupling``
    (``hbar_folded``).  Blocks are stored in Hermitian real-symmetric form:
    D_x f(H) is already real symmetric in the Hermite basis, while D_v f(H)
    is unitarily equivalent to the same real block through the phases
    i^{n_axis}.  :meth:`to_dense` restores the true complex matrix.
    """

    direction: str = "x"
    axis: int = 0
    hbar_folded: bool = True

    def to_dense(self) -> np.ndarray:
        """Materialize the commutator on the truncated simplex space (graded order)."""
        sh = self.shells
        idx = multi_indices(sh.d, sh.K)
        pos = {tuple(n): i for i, n in enumerate(idx)}
        dtype = float if self.direction == "x" else complex
        A = np.zeros((len(idx), len(idx)), dtype=dtype)
        for i, n in enumerate(idx):
            total = int(n.sum())
            if total == sh.K:
                continue
            up = n.copy()
            up[self.axis] += 1
            j = pos[tuple(up)]
            val = self.coupling[n[self.axis]] * self.upper[total]
            if self.direction == "x":
                A[i, j] = A[j, i] = val
            else:
                A[i, j] = -1j * val
                A[j, i] = 1j * val
        return A


def _state_values(state, shells):
    if isinstance(state, OccupationProfile):
        return state.rho, state.shells
    if shells is None:
        raise ValueError("a shell table is needed when passing raw eigenvalues")
    values = np.asarray(state, dtype=float)
    if values.shape != (shells.K + 1,):
        raise ValueError(f"expected {shells.K + 1} shell values, got shape {values.shape}")
    return values, shells


def _check(shells: ShellTable, other: ShellTable | None, direction: str, axis: int):
    if other is not None and (other.K != shells.K or other.d != shells.d
                              or other.hbar != shells.hbar):
        raise ValueError("profile and shell table have mismatched cutoffs")
    if direction not in DIRECTIONS:
        raise ValueError(f"direction must be one of {DIRECTIONS}, got {direction!r}")
    if not 0 <= axis < shells.d:
        raise ValueError(f"axis {axis} out of range for d={shells.d}")


def gradient_coupling(shells: ShellTable) -> np.ndarray:
    """(1/hbar) <j|x|j+1> for j = 0..K-1."""
    return LadderElements(shells.hbar).offdiag(np.arange(shells.K)) / shells.hbar


def commutator_blocks(state, shells: ShellTable | None = None, direction: str = "x",
                      axis: int = 0) -> GradientBlocks:
    """Quantum gradient of a state given per shell (profile or raw eigenvalues).

    Uses ([A, f(H)])_{mn} = A_{mn} (f_n - f_m) with the ladder elements of A.
    """
    values, sh = _state_values(state, shells)
    _check(sh, shells, direction, axis)
    return GradientBlocks(sh, gradient_coupling(sh), np.diff(values), None,
                          direction=direction, axis=axis)


def sqrt_gradient_blocks(state, shells: ShellTable | None = None, direction: str = "x",
                         axis: int = 0) -> GradientBlocks:
    """Quantum gradient of the square root of a state (exact: eigenvalues are rooted)."""
    values, sh = _state_values(state, shells)
    if np.any(values < 0):
        raise ValueError("state eigenvalues must be nonnegative")
    return commutator_blocks(np.sqrt(values), sh, direction, axis)


def duhamel_kernel(log_a, log_b):
    """int_0^1 a^{1-s} b^s ds = (a - b) / ln(a / b), evaluated from logarithms.

    The a = b limit is a.
    """
    log_a = np.asarray(log_a, dtype=float)
    delta = np.asarray(log_b, dtype=float) - log_a
    small = np.abs(delta) < 1e-12
    safe = np.where(small, 1.0, delta)
    ratio = np.where(small, 1.0 + delta / 2, np.expm1(safe) / safe)
    return np.exp(log_a) * ratio


def duhamel_kernel_quadrature(log_a, log_b, order: int):
    """Gauss-Legendre approximation of the same s-integral."""
    if order < 2:
        raise ValueError("quadrature order must be at least 2")
    log_a = np.asarray(log_a, dtype=float)
    log_b = np.asarray(log_b, dtype=float)
    if np.any(np.abs(log_a - log_b) > 50):
        warnings.warn("Duhamel integrand spans more than e^50; prefer the analytic kernel",
                      RuntimeWarning, stacklevel=2)
    s, w = np.polynomial.legendre.leggauss(order)
    s = 0.5 * (s + 1)
    w = 0.5 * w
    expo = np.outer(1 - s, log_a) + np.outer(s, log_b)
    return w @ np.exp(expo)


def duhamel_blocks(profile: OccupationProfile, shells: ShellTable | None = None,
                   direction: str = "x", axis: int = 0,
                   quadrature_order: int | None = None) -> GradientBlocks:
    """Gradient of a thermal state through the Duhamel integral representation.

    With G_mu the Boltzmann part of the state and lambda the density parameter
    (zero for Maxwell-Boltzmann, where G_mu is the state itself), the
    shell-pair entry is

        -beta * <x> * int_0^1 a_k^{1-s} a_{k+1}^s ds / ((1 + lambda a_k)(1 + lambda a_{k+1})).

    ``quadrature_order=None`` uses the analytic s-integral.
    """
    sh = profile.shells
    _check(sh, shells, direction, axis)
    beta, hbar = profile.params.beta, sh.hbar
    la = profile.log_gibbs
    if quadrature_order is None:
        kern = duhamel_kernel(la[:-1], la[1:])
    else:
        kern = duhamel_kernel_quadrature(la[:-1], la[1:], quadrature_order)
    if profile.kind == FERMI_DIRAC:
        # (1 + lam a_k)^-1 with lam a_k = e^{-beta(E_k - mu)}
        resolvent = expit(beta * (sh.energies - profile.mu))
        factor = resolvent[:-1] * resolvent[1:]
    else:
        factor = 1.0
    # <x> = hbar * coupling, the 1/hbar of the gradient cancels hbar
    upper = -beta * hbar * kern * factor
    return GradientBlocks(sh, gradient_coupling(sh), upper, None,
                          direction=direction, axis=axis)
