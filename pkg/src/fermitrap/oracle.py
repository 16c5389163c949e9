"""Dense reference implementations used for cross-checks only.

Everything is materialized on the full truncated simplex space
{n in N^d : |n|_1 <= K} from raw ladder operators, and reduced with generic
dense linear algebra.  Production paths never import this module; the
``selftest`` command and the test suite do.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .thermal_states import OccupationProfile

DEFAULT_CEILING = 4000


class DenseCeilingError(ValueError):
    pass


@dataclass(frozen=True)
class DenseOperator:
    entries: np.ndarray
    basis_index: dict

    @property
    def dim(self) -> int:
        return self.entries.shape[0]


def basis(d: int, K: int, ceiling: int = DEFAULT_CEILING) -> list:
    """Multi-indices with |n|_1 <= K, graded then lexicographically descending."""
    dim = math.comb(K + d, d)
    if dim > ceiling:
        raise DenseCeilingError(f"dense dimension {dim} exceeds ceiling {ceiling}")
    out = []
    for total in range(K + 1):
        out.extend(sorted((n for n in _all_with_sum(d, total)), reverse=True))
    return out


def _all_with_sum(d, total):
    if d == 1:
        yield (total,)
        return
    for first in range(total + 1):
        for rest in _all_with_sum(d - 1, total - first):
            yield (first,) + rest


def _annihilator(states, index, axis):
    a = np.zeros((len(states), len(states)))
    for col, n in enumerate(states):
        if n[axis] == 0:
            continue
        m = list(n)
        m[axis] -= 1
        a[index[tuple(m)], col] = math.sqrt(n[axis])
    return a


def position(d, K, hbar, axis=0, ceiling=DEFAULT_CEILING) -> DenseOperator:
    st = basis(d, K, ceiling)
    idx = {n: i for i, n in enumerate(st)}
    a = _annihilator(st, idx, axis)
    return DenseOperator(math.sqrt(hbar / 2) * (a + a.T), idx)


def momentum(d, K, hbar, axis=0, ceiling=DEFAULT_CEILING) -> DenseOperator:
    st = basis(d, K, ceiling)
    idx = {n: i for i, n in enumerate(st)}
    a = _annihilator(st, idx, axis)
    return DenseOperator(1j * math.sqrt(hbar / 2) * (a.T - a), idx)


def hamiltonian(d, K, hbar, ceiling=DEFAULT_CEILING) -> DenseOperator:
    """(|p|^2 + |x|^2)/2 from projected squares: each P q_i^2 P is taken from a K+2 space."""
    big = basis(d, K + 2, ceiling=max(ceiling, math.comb(K + 2 + d, d)))
    keep = [i for i, n in enumerate(big) if sum(n) <= K]
    big_idx = {n: i for i, n in enumerate(big)}
    H = np.zeros((len(keep), len(keep)), dtype=complex)
    for axis in range(d):
        a = _annihilator(big, big_idx, axis)
        x = math.sqrt(hbar / 2) * (a + a.T)
        p = 1j * math.sqrt(hbar / 2) * (a.T - a)
        H += 0.5 * ((x @ x) + (p @ p))[np.ix_(keep, keep)]
    st = big[:len(keep)]
    return DenseOperator(H, {n: i for i, n in enumerate(st)})


def momentum_squared_total(d, K, hbar, ceiling=DEFAULT_CEILING) -> np.ndarray:
    """sum_i P p_i^2 P on the |n|_1 <= K space."""
    big = basis(d, K + 2, ceiling=max(ceiling, math.comb(K + 2 + d, d)))
    keep = [i for i, n in enumerate(big) if sum(n) <= K]
    big_idx = {n: i for i, n in enumerate(big)}
    out = np.zeros((len(keep), len(keep)))
    for axis in range(d):
        a = _annihilator(big, big_idx, axis)
        p = 1j * math.sqrt(hbar / 2) * (a.T - a)
        out += np.real((p @ p)[np.ix_(keep, keep)])
    return out


def dense_state(profile: OccupationProfile, values=None, ceiling=DEFAULT_CEILING) -> DenseOperator:
    """Diagonal matrix of state eigenvalues (or given per-shell ``values``)."""
    sh = profile.shells
    st = basis(sh.d, sh.K, ceiling)
    vals = profile.rho if values is None else np.asarray(values)
    diag = np.array([vals[sum(n)] for n in st])
    return DenseOperator(np.diag(diag), {n: i for i, n in enumerate(st)})


def dense_gradient(profile: OccupationProfile, direction="x", axis=0, values=None,
                   ceiling=DEFAULT_CEILING) -> DenseOperator:
    """[grad, rho] = (i/hbar)[p, rho] or [x/(i hbar), rho] materialized densely."""
    sh = profile.shells
    rho = dense_state(profile, values, ceiling)
    if direction == "x":
        A = (1j / sh.hbar) * momentum(sh.d, sh.K, sh.hbar, axis, ceiling).entries
    elif direction == "v":
        A = position(sh.d, sh.K, sh.hbar, axis, ceiling).entries / (1j * sh.hbar)
    else:
        raise ValueError(direction)
    R = rho.entries
    return DenseOperator(A @ R - R @ A, rho.basis_index)


def singular_values(M: np.ndarray) -> np.ndarray:
    return np.sort(np.linalg.svd(M, compute_uv=False))[::-1]


def schatten(M: np.ndarray, p: float, h: float, dim: int) -> float:
    s = singular_values(M)
    if math.isinf(p):
        return float(s[0]) if s.size else 0.0
    return h ** (dim / p) * float(np.sum(s**p)) ** (1 / p)


def weight_matrix(d, K, hbar, n, ceiling=DEFAULT_CEILING, zero="identity") -> np.ndarray:
    """1 + |p|^n with |p|^n by dense eigendecomposition of sum_i P p_i^2 P."""
    P2 = momentum_squared_total(d, K, hbar, ceiling)
    if n == 0:
        return (2.0 if zero == "two" else 1.0) * np.eye(P2.shape[0])
    w, V = np.linalg.eigh(P2)
    return np.eye(len(w)) + (V * np.abs(w) ** (n / 2)) @ V.T


def sobolev(profile: OccupationProfile, n: int, p: float, values=None, axis=0,
            ceiling=DEFAULT_CEILING) -> float:
    """||A||_{W^{1,p}(m)} computed densely for a per-shell state."""
    sh = profile.shells
    dim = profile.params.schatten_dim
    m = weight_matrix(sh.d, sh.K, sh.hbar, n, ceiling, profile.params.weight_zero)
    pieces = [dense_state(profile, values, ceiling).entries,
              dense_gradient(profile, "x", axis, values, ceiling).entries,
              dense_gradient(profile, "v", axis, values, ceiling).entries]
    norms = [schatten(A @ m, p, sh.h, dim) for A in pieces]
    if math.isinf(p):
        return max(norms)
    return sum(v**p for v in norms) ** (1 / p)
