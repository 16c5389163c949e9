"""Acceptance criteria, one test (and one printed PASS/FAIL line) per criterion."""

import itertools
import math
import time
import warnings

import numpy as np
import pytest

from conftest import record_acceptance
from fermitrap import bounds
from fermitrap.cli import main
from fermitrap.gradients import commutator_blocks, duhamel_blocks
from fermitrap.harness import classical_slope, log_slope
from fermitrap.norms import WeightSpec, blocks_schatten_norm, sobolev_norm
from fermitrap.selftest import run_selftest
from fermitrap.spectral_core import build_shell_table
from fermitrap.thermal_states import (
    ModelParams,
    choose_cutoff,
    maxwell_boltzmann,
    partition_closed,
    partition_spectral,
    solve_chemical_potential,
)
from fermitrap.wigner import coth_moment, thermal_moment_closed, thermal_moment_spectral

DS = (1, 2, 3)
BETAS = (0.25, 1.0, 4.0)
HBARS = (0.02, 0.1, 0.5, 0.9)
LAMS = (0.1, 1.0, 2 * math.pi)
PS = (2.0, 4.0, math.inf)


def report(number, ok, detail):
    record_acceptance(f"CRITERION {number}: {'PASS' if ok else 'FAIL'} {detail}")
    assert ok, detail


@pytest.fixture(scope="module")
def fd_grid():
    """Solved Fermi-Dirac profiles on the (d, beta, hbar, lambda) grid."""
    t0 = time.perf_counter()
    out = {key: solve_chemical_potential(ModelParams(d=key[0], beta=key[1], hbar=key[2], lam=key[3]))
           for key in itertools.product(DS, BETAS, HBARS, LAMS)}
    return out, time.perf_counter() - t0


def test_criterion_01_partition_identity():
    t0 = time.perf_counter()
    worst = 0.0
    for d, beta, hbar in itertools.product(DS, BETAS, HBARS):
        sh = choose_cutoff(d, hbar, beta, 1e-13)
        z = partition_spectral(sh, beta, tail_tol=1e-13)
        worst = max(worst, abs(z / partition_closed(d, beta, hbar) - 1))
    elapsed = time.perf_counter() - t0
    report(1, worst < 1e-10 and elapsed < 1.0,
           f"max rel err {worst:.2e} (< 1e-10), runtime {elapsed:.3f} s (< 1 s)")


def test_criterion_02_trace_constraint(fd_grid):
    grid, elapsed = fd_grid
    worst = max(abs(p.trace() - 1) for p in grid.values())
    monotone = all(
        grid[(d, b, h, LAMS[0])].mu < grid[(d, b, h, LAMS[1])].mu < grid[(d, b, h, LAMS[2])].mu
        for d, b, h in itertools.product(DS, BETAS, HBARS))
    report(2, worst <= 1e-12 and monotone,
           f"max |h^d tr rho - 1| = {worst:.2e} (<= 1e-12), mu increasing in lambda: {monotone}, "
           f"solve time {elapsed:.2f} s")


def test_criterion_03_fugacity_sandwich(fd_grid):
    grid, _ = fd_grid
    reps = [r for p in grid.values() for r in bounds.fugacity_sandwich(p)]
    upper = [r for r in reps if r.bound_id == "sandwich_upper"]
    lower = [r for r in reps if r.bound_id == "sandwich_lower"]
    ok = all(r.passed for r in reps) and all(r.lhs <= r.rhs for r in upper)
    report(3, ok, f"{len(grid)} points, max lower ratio {max(r.ratio for r in lower):.4f}, "
                  f"max Z_mu/Z_beta {max(r.ratio for r in upper):.7f} (zero slack)")


def test_criterion_04_moment_pin():
    worst_spec = worst_lemma = 0.0
    for beta, hbar in itertools.product((0.5, 1.0, 4.0), (0.1, 0.5, 1.0)):
        pr = ModelParams(d=1, hbar=hbar, beta=beta, tail_moment=3)
        mb = maxwell_boltzmann(pr)
        ref = coth_moment(beta, hbar)
        worst_spec = max(worst_spec, abs(thermal_moment_spectral(mb, 2) / ref - 1))
        worst_lemma = max(worst_lemma, abs(thermal_moment_closed(1, beta, hbar, 2) / ref - 1))
    report(4, worst_spec < 1e-10 and worst_lemma < 1e-12,
           f"spectral vs coth {worst_spec:.2e} (< 1e-10), lemma form vs coth {worst_lemma:.2e} (< 1e-12)")


def test_criterion_05_duhamel_equals_direct():
    worst_an = worst_gl = 0.0
    cases = [(d, K, beta, hbar, lam) for d in (1, 2) for K in (10, 25, 40)
             for beta, hbar, lam in ((1.0, 1.0, 2 * math.pi), (2.0, 0.3, 1.0), (0.5, 0.5, 0.1))]
    for d, K, beta, hbar, lam in cases:
        pr = ModelParams(d=d, hbar=hbar, beta=beta, lam=lam)
        sh = build_shell_table(d, hbar, K)
        for prof in (solve_chemical_potential(pr, sh), maxwell_boltzmann(pr, sh)):
            direct = commutator_blocks(prof).upper
            analytic = duhamel_blocks(prof).upper
            with warnings.catch_warnings():
                warnings.simplefilter("ignore", RuntimeWarning)
                gl = duhamel_blocks(prof, quadrature_order=20).upper
            worst_an = max(worst_an, float(np.max(np.abs(analytic - direct))))
            worst_gl = max(worst_gl, float(np.max(np.abs(gl - direct))),
                           float(np.max(np.abs(gl - analytic))))
    report(5, worst_an <= 1e-12 and worst_gl <= 1e-10,
           f"{len(cases) * 2} profiles: analytic vs direct {worst_an:.2e} (<= 1e-12), "
           f"GL20 vs both {worst_gl:.2e} (<= 1e-10)")


def test_criterion_06_oracle_equivalence():
    results = run_selftest(tol=1e-10)
    worst = max(err for _, _, err in results)
    report(6, all(ok for _, ok, _ in results),
           f"{len(results)} oracle checks (d <= 2, K <= 12), max rel err {worst:.2e} (<= 1e-10)")


def test_criterion_07_main_bound(fd_grid, tmp_path, capsys):
    grid, _ = fd_grid
    worst = 0.0
    fails = 0
    for prof in grid.values():
        blocks = commutator_blocks(prof)
        for p in PS:
            r = bounds.main_bound(prof, p, blocks=blocks)
            worst = max(worst, r.ratio)
            fails += not r.passed
    t0 = time.perf_counter()
    code = main(["verify", "--out", str(tmp_path / "verify.csv")])
    elapsed = time.perf_counter() - t0
    capsys.readouterr()
    report(7, fails == 0 and code == 0 and elapsed < 300,
           f"{len(grid) * len(PS)} checks, max ratio {worst:.4f}; CLI verify on the default grid "
           f"exit {code} in {elapsed:.1f} s (< 300 s)")


def test_criterion_08_linf_and_weight_lemma(fd_grid):
    grid, _ = fd_grid
    props = [bounds.linf_proposition(p) for p in grid.values()]
    weights = []
    for beta, hbar, n in itertools.product((0.25, 1.0, 4.0), (0.1, 0.5, 0.9), (1, 2, 4)):
        if beta * hbar * 400 < 35:
            continue  # K = 400 would not pass the tail policy
        weights.append(bounds.linf_weight_bound(beta, hbar, n, K=400))
    ok = all(r.passed for r in props + weights)
    report(8, ok, f"L^inf proposition max ratio {max(r.ratio for r in props):.4f} on {len(props)} "
                  f"points; weight lemma max ratio {max(r.ratio for r in weights):.4f} on "
                  f"{len(weights)} (beta, hbar, n) cases")


def _slope(d, p, hbar, betas):
    norms = []
    for beta in betas:
        assert beta * hbar <= 0.1
        mb = maxwell_boltzmann(ModelParams(d=d, hbar=hbar, beta=beta))
        norms.append(blocks_schatten_norm(commutator_blocks(mb), p))
    return log_slope(betas, norms)[0]


def test_criterion_09_classical_scaling():
    betas = (0.5, 1.0, 2.0, 4.0, 8.0)
    cases = ((1, 2.0, 1e-3), (1, math.inf, 1e-3), (2, 2.0, 1e-2))
    parts, ok = [], True
    for d, p, hbar in cases:
        s = _slope(d, p, hbar, betas)
        want = classical_slope(d, p)
        rel = abs(s - want) / want
        ok &= rel < 0.05
        parts.append(f"(d={d},p={p:g}) slope {s:.4f} vs {want:.2f} rel {rel:.1e}")
    report(9, ok, "; ".join(parts))


def test_criterion_10_uniform_in_hbar():
    hbars = (0.8, 0.4, 0.2, 0.1, 0.05)
    w = WeightSpec(2)
    rho_vals, sqrt_vals = [], []
    for hbar in hbars:
        prof = solve_chemical_potential(ModelParams(d=1, hbar=hbar, beta=1.0, lam=1.0))
        rho_vals.append(sobolev_norm(prof, w, 2))
        sqrt_vals.append(sobolev_norm(prof.sqrt(), w, 2, prof.shells))
    ok = True
    parts = []
    for name, vals in (("rho", rho_vals), ("sqrt rho", sqrt_vals)):
        spread = max(vals) / min(vals)
        steps = [b / a for a, b in zip(vals, vals[1:])]
        ok &= spread < 3 and all(abs(s - 1) < 0.1 for s in steps)
        parts.append(f"{name}: max/min {spread:.4f}, last step ratio {steps[-1]:.5f}")
    report(10, ok, "; ".join(parts))


def test_criterion_11_sqrt_lemma(fd_grid):
    grid, _ = fd_grid
    reps = [bounds.sqrt_lemma(p, 2, q, r) for p in grid.values() for q, r in ((4, 4), (2, math.inf))]
    report(11, all(r.passed for r in reps),
           f"{len(reps)} checks, max ratio {max(r.ratio for r in reps):.6f}")
