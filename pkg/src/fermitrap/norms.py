"""Semiclassical Schatten norms and weighted Sobolev norms.

The semiclassical L^p norm is h^{dim/p} (Tr |A|^p)^{1/p} with h = 2 pi hbar;
``dim`` is the spatial dimension unless the literal-3 convention is selected.

Gradient norms use the block structure of :mod:`fermitrap.gradients`:

* p = 2 and p = 4 are exact trace identities of the zero-diagonal
  tridiagonal blocks, summed over blocks as discrete convolutions of the
  coupling with the transverse multiplicities;
* p = inf is the largest block singular value, found with a Gershgorin
  screen so that only blocks that can beat the running maximum are solved;
* any other p goes through the full singular spectrum.

Weighted norms (m = 1 + |p|^n) are dense by design.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.linalg import LinAlgError, eigvalsh_tridiagonal
from scipy.signal import fftconvolve

from .gradients import GradientBlocks, ShellBlocks, commutator_blocks
from .spectral_core import ShellTable, momentum_squared_parity_blocks, multi_indices
from .thermal_states import OccupationProfile

DEFAULT_DENSE_CEILING = 4000
_DIRECT_CONVOLVE_MAX = 20000


class EigensolverError(RuntimeError):
    pass


class DenseCeilingError(ValueError):
    pass


@dataclass(frozen=True)
class SingularSpectrum:
    """Singular values (nonincreasing) with integer multiplicities."""

    values: np.ndarray
    weights: np.ndarray
    scale_h: float
    scale_d: int

    @property
    def max(self) -> float:
        return float(self.values[0]) if self.values.size else 0.0

    def power_sum(self, p: float) -> float:
        return float(np.sum(self.weights * self.values**p))


@dataclass(frozen=True)
class WeightSpec:
    """Momentum weight m = 1 + |p|^n.

    n = 0 is read as the unweighted norm (m = I); ``zero="two"`` gives the
    literal 1 + |p|^0 = 2I instead.
    """

    n: int = 0
    zero: str = "identity"

    def __post_init__(self):
        if self.n < 0:
            raise ValueError("weight exponent must be nonnegative")
        if self.zero not in ("identity", "two"):
            raise ValueError("zero must be 'identity' or 'two'")


def _check_p(p: float):
    if not p >= 1:
        raise ValueError(f"Schatten index must be >= 1, got {p!r}")


def _lp_combine(power_sum: float, p: float, h: float, dim: int) -> float:
    return h ** (dim / p) * power_sum ** (1.0 / p)


def schatten_norm(spec: SingularSpectrum, p: float) -> float:
    """h^{d/p} (sum_i w_i sigma_i^p)^{1/p}; p = inf gives sigma_max."""
    _check_p(p)
    if math.isinf(p):
        return spec.max
    top = spec.max
    if top == 0:
        return 0.0
    scaled = float(np.sum(spec.weights * (spec.values / top) ** p))
    return spec.scale_h ** (spec.scale_d / p) * top * scaled ** (1.0 / p)


def diagonal_schatten_norm(values, shells: ShellTable, p: float, dim: int | None = None) -> float:
    """Norm of a state given by one eigenvalue per shell."""
    _check_p(p)
    v = np.abs(np.asarray(values, dtype=float))
    if math.isinf(p):
        return float(v.max())
    dim = shells.d if dim is None else dim
    top = v.max()
    if top == 0:
        return 0.0
    return shells.h ** (dim / p) * top * float(np.sum(shells.mults * (v / top) ** p)) ** (1 / p)


# --- tridiagonal eigenvalues --------------------------------------------------

def _tridiag_eigvals(off: np.ndarray, where: str = "", **kw) -> np.ndarray:
    try:
        return eigvalsh_tridiagonal(np.zeros(off.size + 1), off, **kw)
    except (LinAlgError, ValueError) as exc:
        raise EigensolverError(f"tridiagonal eigensolver failed{where}: {exc}") from exc


def _paths(u: np.ndarray, l: np.ndarray):
    """Split [[0, B], [B^T, 0]] of a zero-diagonal tridiagonal B into two path matrices."""
    even = np.arange(u.size) % 2 == 0
    return np.where(even, u, l), np.where(even, l, u)


def block_singular_values(u, l=None, where: str = "") -> np.ndarray:
    """Singular values of the (m+1)x(m+1) zero-diagonal tridiagonal block with
    super-diagonal ``u`` and sub-diagonal ``l`` (``l=None``: symmetric)."""
    u = np.asarray(u, dtype=float)
    if u.size == 0:
        return np.zeros(1)
    if l is None or l is u:
        return np.sort(np.abs(_tridiag_eigvals(u, where)))[::-1]
    a, b = _paths(u, np.asarray(l, dtype=float))
    both = np.concatenate([_tridiag_eigvals(a, where), _tridiag_eigvals(b, where)])
    return np.sort(both)[::-1][:u.size + 1].clip(min=0.0)


def block_max_singular(u, l=None, where: str = "") -> float:
    u = np.asarray(u, dtype=float)
    if u.size == 0:
        return 0.0
    top = (u.size, u.size)
    if l is None or l is u:
        return float(abs(_tridiag_eigvals(u, where, select="i", select_range=top)[0]))
    return max(float(_tridiag_eigvals(t, where, select="i", select_range=top)[0])
               for t in _paths(u, np.asarray(l, dtype=float)))


def singular_spectrum(blocks: ShellBlocks, dim: int | None = None) -> SingularSpectrum:
    """Full singular spectrum of a block family, merged with block multiplicities."""
    vals, wts = [], []
    sym = blocks.symmetric
    for r, mult, u, l in blocks.iter_blocks():
        s = block_singular_values(u, None if sym else l, where=f" on block r={r}")
        vals.append(s)
        wts.append(np.full(s.size, mult))
    values = np.concatenate(vals) if vals else np.zeros(1)
    weights = np.concatenate(wts) if wts else np.ones(1)
    order = np.argsort(values, kind="stable")[::-1]
    sh = blocks.shells
    return SingularSpectrum(values[order], weights[order], sh.h, sh.d if dim is None else dim)


# --- fast block norms ------------------------------------------------------------

def _conv_mult(seq: np.ndarray, mult: np.ndarray, length: int) -> np.ndarray:
    """(seq * mult)[k] = sum_{j + r = k} seq[j] mult[r] for k < length."""
    nz = np.nonzero(mult)[0]
    if nz.size == 1 and nz[0] == 0:
        return (seq * mult[0])[:length]
    if seq.size * mult.size <= _DIRECT_CONVOLVE_MAX**2:
        out = np.convolve(seq, mult)
    else:
        out = fftconvolve(seq, mult)
    return out[:length]


def power_sum(blocks: ShellBlocks, p: int) -> float:
    """sum of sigma^p over all blocks (with multiplicity), exactly, for p in {2, 4}."""
    K = blocks.K
    if K == 0:
        return 0.0
    c2 = blocks.coupling**2
    g = blocks.block_mult
    U2 = blocks.upper**2
    L2 = U2 if blocks.lower is None else blocks.lower**2
    if p == 2:
        return float(np.sum((U2 + L2) * _conv_mult(c2, g, K)))
    if p == 4:
        first = float(np.sum((U2**2 + L2**2) * _conv_mult(c2**2, g, K)))
        if K < 2:
            return first
        w = c2[:-1] * c2[1:]
        cross = U2[:-1] * L2[1:] + L2[:-1] * U2[1:]
        return first + 2.0 * float(np.sum(cross * _conv_mult(w, g, K - 1)))
    raise ValueError("closed-form power sums exist for p = 2 and p = 4 only")


def max_singular_value(blocks: ShellBlocks) -> float:
    """Largest singular value over all blocks, solving only blocks that can win."""
    K = blocks.K
    if K == 0:
        return 0.0
    sym = blocks.symmetric
    U = np.abs(blocks.upper)
    L = U if sym else np.abs(blocks.lower)
    UL = np.maximum(U, L)
    # every entry of block r' >= r is at most coupling[K-1-r] * max_{k >= r} UL[k]
    suffix = np.maximum.accumulate(UL[::-1])[::-1]
    screen = 2.0 * blocks.coupling[::-1] * suffix
    mult = blocks.block_mult
    best = 0.0
    for r in range(K):
        if screen[r] <= best:
            break
        if mult[r] == 0:
            continue
        u, l = blocks.block(r)
        au, al = np.abs(u), np.abs(l)
        rows = np.concatenate([au, [0.0]]) + np.concatenate([[0.0], al])
        cols = np.concatenate([al, [0.0]]) + np.concatenate([[0.0], au])
        if max(rows.max(), cols.max()) <= best:
            continue
        best = max(best, block_max_singular(u, None if sym else l, where=f" on block r={r}"))
    return best


def blocks_schatten_norm(blocks: ShellBlocks, p: float, dim: int | None = None) -> float:
    """Semiclassical Schatten norm of a block family, choosing the cheapest exact path."""
    _check_p(p)
    sh = blocks.shells
    dim = sh.d if dim is None else dim
    if math.isinf(p):
        return max_singular_value(blocks)
    if p in (2, 4):
        return _lp_combine(max(power_sum(blocks, int(p)), 0.0), p, sh.h, dim)
    return schatten_norm(singular_spectrum(blocks, dim), p)


# --- weights and dense norms -------------------------------------------------------

def _dense_dim(shells: ShellTable, ceiling: int) -> int:
    dim = math.comb(shells.K + shells.d, shells.d)
    if dim > ceiling:
        raise DenseCeilingError(
            f"dense dimension C(K+d,d)={dim} exceeds the ceiling {ceiling} (K={shells.K}, d={shells.d})")
    return dim


def momentum_squared_total(shells: ShellTable, ceiling: int = DEFAULT_DENSE_CEILING) -> np.ndarray:
    """sum_i P p_i^2 P on the truncated simplex space (graded order)."""
    _dense_dim(shells, ceiling)
    d, K, hbar = shells.d, shells.K, shells.hbar
    if d == 1:
        out = np.zeros((K + 1, K + 1))
        for parity, (diag, off) in enumerate(momentum_squared_parity_blocks(K, hbar)):
            idx = np.arange(parity, K + 1, 2)
            out[idx, idx] = diag
            out[idx[:-1], idx[1:]] = off
            out[idx[1:], idx[:-1]] = off
        return out
    idx = multi_indices(d, K)
    pos = {tuple(n): i for i, n in enumerate(idx)}
    out = np.zeros((len(idx), len(idx)))
    for i, n in enumerate(idx):
        total = int(n.sum())
        for axis in range(d):
            j = n[axis]
            out[i, i] += hbar * (j + 0.5)
            if total + 2 <= K:
                up = n.copy()
                up[axis] += 2
                k = pos[tuple(up)]
                v = -0.5 * hbar * math.sqrt((j + 1) * (j + 2))
                out[i, k] = out[k, i] = v
    return out


def _abs_power_d1(K: int, hbar: float, n: int) -> np.ndarray:
    """|p|^n by functional calculus on the eigendecomposition of each parity block."""
    out = np.zeros((K + 1, K + 1))
    for parity, (diag, off) in enumerate(momentum_squared_parity_blocks(K, hbar)):
        idx = np.arange(parity, K + 1, 2)
        block = np.diag(diag) + np.diag(off, 1) + np.diag(off, -1)
        w, V = np.linalg.eigh(block)
        out[np.ix_(idx, idx)] = (V * np.abs(w) ** (n / 2)) @ V.T
    return out


def weight_matrix(shells: ShellTable, weight: WeightSpec,
                  ceiling: int = DEFAULT_DENSE_CEILING, method: str = "auto") -> np.ndarray:
    """Dense m = 1 + |p|^n on the truncated space.

    ``method="banded"`` (even n only) forms (sum_i P p_i^2 P)^{n/2} by matrix
    products; ``method="functional"`` diagonalizes |p|^2 and applies
    t -> t^{n/2}.  ``"auto"`` uses banded products for even n.
    """
    dim = _dense_dim(shells, ceiling)
    if weight.n == 0:
        return (2.0 if weight.zero == "two" else 1.0) * np.eye(dim)
    if method == "auto":
        method = "banded" if weight.n % 2 == 0 else "functional"
    if method == "banded":
        if weight.n % 2:
            raise ValueError("banded weights need an even exponent")
        P2 = momentum_squared_total(shells, ceiling)
        return np.eye(dim) + np.linalg.matrix_power(P2, weight.n // 2)
    if method != "functional":
        raise ValueError(f"unknown method {method!r}")
    if shells.d == 1:
        return np.eye(dim) + _abs_power_d1(shells.K, shells.hbar, weight.n)
    w, V = np.linalg.eigh(momentum_squared_total(shells, ceiling))
    return np.eye(dim) + (V * np.abs(w) ** (weight.n / 2)) @ V.T


def _as_dense(op, shells: ShellTable | None, ceiling: int):
    if isinstance(op, OccupationProfile):
        _dense_dim(op.shells, ceiling)
        diag = op.rho[multi_indices(op.shells.d, op.K).sum(axis=1)]
        return np.diag(diag), op.shells
    if isinstance(op, GradientBlocks):
        _dense_dim(op.shells, ceiling)
        return op.to_dense(), op.shells
    if shells is None:
        raise ValueError("a shell table is needed for a raw dense operator")
    return np.asarray(op), shells


def weighted_operator(op, weight: WeightSpec, shells: ShellTable | None = None,
                      ceiling: int = DEFAULT_DENSE_CEILING, m: np.ndarray | None = None) -> np.ndarray:
    """Dense product A m for a profile, a gradient block family or a dense matrix."""
    A, sh = _as_dense(op, shells, ceiling)
    if m is None:
        m = weight_matrix(sh, weight, ceiling)
    return A @ m


def dense_schatten_norm(M: np.ndarray, p: float, h: float, dim: int) -> float:
    _check_p(p)
    s = np.linalg.svd(M, compute_uv=False)
    if math.isinf(p):
        return float(s.max()) if s.size else 0.0
    top = s.max()
    if top == 0:
        return 0.0
    return h ** (dim / p) * top * float(np.sum((s / top) ** p)) ** (1 / p)


def combine_sobolev(pieces, p: float) -> float:
    """p-th root of the sum of p-th powers; the maximum for p = inf."""
    pieces = list(pieces)
    if math.isinf(p):
        return max(pieces)
    return math.fsum(v**p for v in pieces) ** (1 / p)


def sobolev_components(state, weight: WeightSpec, p: float, shells: ShellTable | None = None,
                       dim: int | None = None, axis: int = 0,
                       ceiling: int = DEFAULT_DENSE_CEILING) -> tuple[float, float, float]:
    """(||A m||, ||D_x A m||, ||D_v A m||) for a state given per shell.

    ``state`` is an :class:`OccupationProfile` (the state itself) or an array of
    per-shell eigenvalues (e.g. the square root of a state) with ``shells``.
    """
    if isinstance(state, OccupationProfile):
        values, sh = state.rho, state.shells
        if dim is None:
            dim = state.params.schatten_dim
    else:
        values, sh = np.asarray(state, dtype=float), shells
    dim = sh.d if dim is None else dim
    _check_p(p)
    if weight.n == 0 and weight.zero == "identity":
        return (diagonal_schatten_norm(values, sh, p, dim),
                blocks_schatten_norm(commutator_blocks(values, sh, "x", axis), p, dim),
                blocks_schatten_norm(commutator_blocks(values, sh, "v", axis), p, dim))
    m = weight_matrix(sh, weight, ceiling)
    state_dense = np.diag(values[multi_indices(sh.d, sh.K).sum(axis=1)])
    out = [dense_schatten_norm(state_dense @ m, p, sh.h, dim)]
    for direction in ("x", "v"):
        G = commutator_blocks(values, sh, direction, axis).to_dense()
        out.append(dense_schatten_norm(G @ m, p, sh.h, dim))
    return tuple(out)


def sobolev_norm(state, weight: WeightSpec, p: float, shells: ShellTable | None = None,
                 dim: int | None = None, axis: int = 0,
                 ceiling: int = DEFAULT_DENSE_CEILING) -> float:
    """||A||_{W^{1,p}(m)} with ||A||^p = ||A m||^p + ||D_x A m||^p + ||D_v A m||^p."""
    return combine_sobolev(sobolev_components(state, weight, p, shells, dim, axis, ceiling), p)
