import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from fermitrap.spectral_core import (
    LadderElements,
    build_shell_table,
    momentum_squared_matrix,
    momentum_squared_parity_blocks,
    multi_indices,
    shell_multiplicity,
)


def test_d1_table():
    sh = build_shell_table(1, 1.0, 3)
    np.testing.assert_allclose(sh.energies, [0.5, 1.5, 2.5, 3.5])
    assert list(sh.mults) == [1, 1, 1, 1]


def test_d3_mults():
    assert list(build_shell_table(3, 1.0, 2).mults) == [1, 3, 6]


def test_simplex_count():
    sh = build_shell_table(2, 0.1, 100)
    assert sh.mults.sum() == 5151 == math.comb(102, 2)


@pytest.mark.parametrize("args", [(0, 1.0, 3), (1, 0.0, 3), (1, float("nan"), 3), (1, 1.0, -1)])
def test_rejects_bad_input(args):
    with pytest.raises(ValueError):
        build_shell_table(*args)


@given(st.integers(1, 6), st.integers(0, 60))
def test_pascal_and_simplex(d, K):
    sh = build_shell_table(d, 0.3, K)
    assert np.all(sh.mults >= 1)
    if d > 1:
        for k in range(1, K + 1):
            assert shell_multiplicity(k, d) == shell_multiplicity(k - 1, d) + shell_multiplicity(k, d - 1)
    assert sh.mults.sum() == math.comb(K + d, d)
    np.testing.assert_allclose(np.diff(sh.energies), 0.3, rtol=1e-12)


def test_ladder_invariants():
    lad = LadderElements(0.7)
    j = np.arange(1, 50)
    v = lad.offdiag(j)
    assert np.all(v > 0)
    np.testing.assert_allclose(v**2 - lad.offdiag(j - 1) ** 2, 0.35)
    P = lad.momentum_matrix(10)
    X = lad.position_matrix(10)
    np.testing.assert_allclose(np.abs(np.diag(P, 1)), np.diag(X, 1))


def test_parity_blocks_examples():
    (de, oe), (do, oo) = momentum_squared_parity_blocks(1, 1.0)
    np.testing.assert_allclose(de, [0.5])
    np.testing.assert_allclose(do, [1.5])
    (de, oe), _ = momentum_squared_parity_blocks(2, 1.0)
    np.testing.assert_allclose(de, [0.5, 2.5])
    np.testing.assert_allclose(oe, [-math.sqrt(2) / 2])
    blocks = momentum_squared_parity_blocks(3, 2.0)
    assert sum(b[0].sum() for b in blocks) == pytest.approx(16.0)


def test_p_squared_matches_projected_square():
    K, hbar = 9, 0.4
    P = LadderElements(hbar).momentum_matrix(K + 2)
    ref = np.real((P @ P)[: K + 1, : K + 1])
    np.testing.assert_allclose(momentum_squared_matrix(K, hbar), ref, atol=1e-14)


def test_multi_indices_graded():
    idx = multi_indices(3, 4)
    assert len(idx) == math.comb(7, 3)
    sums = idx.sum(axis=1)
    assert np.all(np.diff(sums) >= 0)
    assert len({tuple(r) for r in idx}) == len(idx)


@settings(max_examples=20)
@given(st.integers(1, 4), st.floats(0.01, 1.0))
def test_transverse_mults_cover_dimension(d, hbar):
    sh = build_shell_table(d, hbar, 15)
    r = np.arange(16)
    assert np.sum(sh.transverse_mults() * (15 - r + 1)) == math.comb(15 + d, d)
