"""Oracle-equivalence checks on small truncated spaces.

Each check compares a fast block path against the dense reference in
:mod:`fermitrap.oracle` and returns ``(name, ok, max_error)``.
"""

from __future__ import annotations

import numpy as np

from . import oracle
from .gradients import commutator_blocks, duhamel_blocks
from .norms import WeightSpec, singular_spectrum, sobolev_norm
from .spectral_core import build_shell_table, multi_indices
from .thermal_states import FERMI_DIRAC, MAXWELL_BOLTZMANN, ModelParams, occupations

TOL = 1e-10
CASES = ((1, 12, 0.5, 1.0), (2, 8, 0.3, 2.0), (2, 12, 0.8, 0.5))


def small_profile(d, K, hbar, beta, kind=FERMI_DIRAC, lam=1.0, mu=None):
    """A thermal profile on a fixed small cutoff (no tail policy)."""
    pr = ModelParams(d=d, hbar=hbar, beta=beta, lam=lam)
    sh = build_shell_table(d, hbar, K)
    if kind == FERMI_DIRAC and mu is None:
        mu = sh.energies[min(K, 2)]
    return occupations(pr, sh, kind, mu=mu)


def expanded(spec) -> np.ndarray:
    return np.sort(np.repeat(spec.values, spec.weights.astype(int)))[::-1]


def _rel(a, b) -> float:
    a, b = np.asarray(a), np.asarray(b)
    if a.shape != b.shape:
        return np.inf
    scale = max(np.max(np.abs(b)), 1e-300)
    return float(np.max(np.abs(a - b)) / scale)


def run_selftest(ceiling: int = oracle.DEFAULT_CEILING, tol: float = TOL):
    results = []

    def record(name, err):
        results.append((name, err <= tol, err))

    for d, K, hbar, beta in CASES:
        tag = f"d={d},K={K}"
        for kind in (FERMI_DIRAC, MAXWELL_BOLTZMANN):
            prof = small_profile(d, K, hbar, beta, kind)
            dense = np.diag(oracle.dense_state(prof, ceiling=ceiling).entries)
            fast = prof.rho[multi_indices(d, K).sum(axis=1)]
            record(f"state eigenvalues {kind} {tag}", _rel(fast, dense))
            spectra = {}
            for direction in ("x", "v"):
                for axis in range(d):
                    blocks = commutator_blocks(prof, direction=direction, axis=axis)
                    s_fast = expanded(singular_spectrum(blocks))
                    s_dense = oracle.singular_values(
                        oracle.dense_gradient(prof, direction, axis, ceiling=ceiling).entries)
                    spectra[direction, axis] = s_fast
                    record(f"gradient spectrum D_{direction} axis {axis} {kind} {tag}",
                           _rel(s_fast, s_dense))
            record(f"x/v symmetry {kind} {tag}", _rel(spectra["x", 0], spectra["v", 0]))
            if d > 1:
                record(f"axis permutation {kind} {tag}", _rel(spectra["x", 0], spectra["x", 1]))
            direct = commutator_blocks(prof).upper
            record(f"duhamel vs direct {kind} {tag}", _rel(duhamel_blocks(prof).upper, direct))
        prof = small_profile(d, K, hbar, beta)
        for p in (2.0, 4.0):
            fast = sobolev_norm(prof, WeightSpec(2), p, ceiling=ceiling)
            dense = oracle.sobolev(prof, 2, p, ceiling=ceiling)
            record(f"sobolev n=2 p={p:g} {tag}", _rel(fast, dense))
    return results
