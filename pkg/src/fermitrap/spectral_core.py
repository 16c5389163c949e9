"""Eigenstructure of the d-dimensional harmonic oscillator in the Hermite basis.

Everything here is expressed through shell combinatorics and exact ladder
matrix elements; Hermite functions are never evaluated pointwise.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.special import gammaln


def shell_multiplicity(k, d: int):
    """Number of multi-indices n in N^d with |n|_1 = k, i.e. C(k+d-1, d-1).

    ``d = 0`` is allowed and gives the Kronecker delta at ``k = 0`` (the
    transverse multiplicity of a one-dimensional problem).
    """
    k = np.asarray(k)
    if d < 0:
        raise ValueError("dimension must be nonnegative")
    if d == 0:
        return (k == 0).astype(float)
    if d == 1:
        return np.ones(k.shape, dtype=float)
    out = np.exp(gammaln(k + d) - gammaln(k + 1) - gammaln(d))
    # exact integers while they fit in a double
    small = out < 2.0**52
    return np.where(small, np.rint(out), out)


@dataclass(frozen=True)
class ShellTable:
    """Oscillator shells k = 0..K with energies (k + d/2)*hbar and multiplicities."""

    d: int
    hbar: float
    K: int
    energies: np.ndarray
    mults: np.ndarray

    @property
    def h(self) -> float:
        return 2.0 * math.pi * self.hbar

    @property
    def levels(self) -> np.ndarray:
        return np.arange(self.K + 1)

    @property
    def dimension(self) -> float:
        """Total number of states kept, C(K+d, d)."""
        return float(np.sum(self.mults))

    def transverse_mults(self) -> np.ndarray:
        """Multiplicity g_{r,d-1} of the transverse shells r = 0..K seen by one axis."""
        return shell_multiplicity(self.levels, self.d - 1)


def build_shell_table(d: int, hbar: float, K: int) -> ShellTable:
    if not isinstance(d, (int, np.integer)) or d < 1:
        raise ValueError(f"dimension must be a positive integer, got {d!r}")
    if not math.isfinite(hbar) or hbar <= 0:
        raise ValueError(f"hbar must be positive and finite, got {hbar!r}")
    if K < 0:
        raise ValueError(f"cutoff must be nonnegative, got {K!r}")
    k = np.arange(int(K) + 1)
    energies = (k + d / 2.0) * hbar
    mults = shell_multiplicity(k, int(d))
    energies.setflags(write=False)
    mults.setflags(write=False)
    return ShellTable(int(d), float(hbar), int(K), energies, mults)


@dataclass(frozen=True)
class LadderElements:
    """Single-direction couplings <j|x|j+1> = sqrt(hbar (j+1) / 2).

    By the x <-> p symmetry of the oscillator the momentum couplings have the
    same magnitudes, <j|p|j+1> = -i * offdiag(j).
    """

    hbar: float

    def offdiag(self, j):
        return np.sqrt(self.hbar * (np.asarray(j, dtype=float) + 1.0) / 2.0)

    def position_matrix(self, K: int) -> np.ndarray:
        """Dense truncated x on levels 0..K (real symmetric tridiagonal)."""
        e = self.offdiag(np.arange(K))
        return np.diag(e, 1) + np.diag(e, -1)

    def momentum_matrix(self, K: int) -> np.ndarray:
        """Dense truncated p on levels 0..K (Hermitian, purely imaginary)."""
        e = self.offdiag(np.arange(K))
        return -1j * np.diag(e, 1) + 1j * np.diag(e, -1)


def momentum_squared_parity_blocks(K: int, hbar: float):
    """Truncated single-direction p^2 split into even and odd levels.

    Returns ``((diag_even, off_even), (diag_odd, off_odd))``; each pair
    describes a symmetric tridiagonal matrix acting on levels of one parity,
    with diagonal hbar*(j + 1/2) and coupling -(hbar/2)*sqrt((j+1)(j+2))
    between levels j and j+2.
    """
    if K < 0:
        raise ValueError("cutoff must be nonnegative")
    if hbar <= 0:
        raise ValueError("hbar must be positive")
    blocks = []
    for parity in (0, 1):
        j = np.arange(parity, K + 1, 2, dtype=float)
        diag = hbar * (j + 0.5)
        off = -0.5 * hbar * np.sqrt((j[:-1] + 1.0) * (j[:-1] + 2.0))
        blocks.append((diag, off))
    return tuple(blocks)


def momentum_squared_matrix(K: int, hbar: float) -> np.ndarray:
    """Dense truncated p^2 on levels 0..K assembled from the parity blocks."""
    P = np.zeros((K + 1, K + 1))
    for parity, (diag, off) in enumerate(momentum_squared_parity_blocks(K, hbar)):
        idx = np.arange(parity, K + 1, 2)
        P[idx, idx] = diag
        P[idx[:-1], idx[1:]] = off
        P[idx[1:], idx[:-1]] = off
    return P


def multi_indices(d: int, K: int) -> np.ndarray:
    """All n in N^d with |n|_1 <= K in graded lexicographic order."""
    rows = []
    for total in range(K + 1):
        rows.extend(_compositions(total, d))
    return np.array(rows, dtype=int).reshape(-1, d)


def _compositions(total: int, d: int):
    if d == 1:
        yield (total,)
        return
    for first in range(total, -1, -1):
        for rest in _compositions(total - first, d - 1):
            yield (first,) + rest
