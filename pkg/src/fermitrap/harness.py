"""Verification campaigns, scaling sweeps and CSV emission.

Grid points are independent; results are always merged in sorted grid order,
so serial and pooled runs write identical files.
"""

from __future__ import annotations

import csv
import datetime as _dt
import io
import json
import math
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field, fields

import numpy as np
from scipy import stats

from . import bounds
from .bounds import DEFAULT_SLACK
from .gradients import commutator_blocks
from .norms import WeightSpec, blocks_schatten_norm, sobolev_norm
from .thermal_states import ModelParams, maxwell_boltzmann, solve_chemical_potential
from .wigner import (
    PhaseSpaceGaussian,
    phase_space_moment,
    thermal_moment_closed,
    thermal_moment_spectral,
)

VERIFY_COLUMNS = ("d", "beta", "hbar", "lambda", "mu", "Z_beta", "Z_mu", "p", "n", "bound_id",
                  "lhs", "rhs", "ratio", "pass", "K_used", "tail_est", "wall_ms")

ALL_BOUNDS = ("main", "main_mb", "linf_prop", "linf_prop_mb", "sandwich", "mu_bound",
              "sqrt_lemma", "split_integral")


class ConfigError(ValueError):
    pass


def _parse_p(v):
    if isinstance(v, str):
        if v.lower() in ("inf", "infinity"):
            return math.inf
        v = float(v)
    return float(v)


@dataclass
class SweepConfig:
    d: list = field(default_factory=lambda: [1, 2, 3])
    beta: list = field(default_factory=lambda: [0.25, 1.0, 4.0, 16.0])
    hbar: list = field(default_factory=lambda: [0.8, 0.4, 0.1, 0.02])
    lam: list = field(default_factory=lambda: [0.1, 1.0, 2 * math.pi])
    p: list = field(default_factory=lambda: [2.0, 4.0, math.inf])
    n: list = field(default_factory=lambda: [0])
    bounds: list = field(default_factory=lambda: list(ALL_BOUNDS))
    state: str = "maxwell_boltzmann"
    tail_tol: float = 1e-13
    mu_tol: float = 1e-13
    slack: float = DEFAULT_SLACK
    dense_ceiling: int = 4000
    schatten_exponent: str = "d"
    weight_zero: str = "identity"
    constant_scale: float = 1.0
    split_order: int = 16
    threads: int = 1
    timing: bool = False
    out: str | None = None

    def validate(self):
        for name in ("d", "beta", "hbar", "lam", "p"):
            if not getattr(self, name):
                raise ConfigError(f"grid '{name}' is empty")
        self.p = [_parse_p(v) for v in self.p]
        self.d = [int(v) for v in self.d]
        for name in ("tail_tol", "mu_tol", "slack"):
            if not getattr(self, name) > 0:
                raise ConfigError(f"{name} must be positive")
        if any(v < 1 for v in self.d):
            raise ConfigError("d must be >= 1")
        if any(v <= 0 for v in self.beta + self.hbar + self.lam):
            raise ConfigError("beta, hbar and lambda must be positive")
        if any(v < 2 for v in self.p):
            raise ConfigError("bounds are stated for p >= 2")
        unknown = set(self.bounds) - set(ALL_BOUNDS)
        if unknown:
            raise ConfigError(f"unknown bound ids: {sorted(unknown)}")
        if self.schatten_exponent not in ("d", "3"):
            raise ConfigError("schatten_exponent must be 'd' or '3'")
        if self.weight_zero not in ("identity", "two"):
            raise ConfigError("weight_zero must be 'identity' or 'two'")
        if self.state not in ("maxwell_boltzmann", "fermi_dirac"):
            raise ConfigError("state must be 'maxwell_boltzmann' or 'fermi_dirac'")
        if self.threads < 1:
            raise ConfigError("threads must be >= 1")
        return self

    def to_dict(self) -> dict:
        out = asdict(self)
        out["p"] = ["inf" if math.isinf(v) else v for v in self.p]
        return out

    @classmethod
    def from_dict(cls, data: dict) -> "SweepConfig":
        names = {f.name for f in fields(cls)}
        unknown = set(data) - names
        if unknown:
            raise ConfigError(f"unknown config keys: {sorted(unknown)}")
        return cls(**data)

    def params(self, d, beta, hbar, lam) -> ModelParams:
        return ModelParams(d=d, hbar=hbar, beta=beta, lam=lam, tail_tol=self.tail_tol,
                           mu_tol=self.mu_tol, schatten_exponent=self.schatten_exponent,
                           weight_zero=self.weight_zero)

    def grid(self):
        return sorted((d, b, h, lam) for d in self.d for b in self.beta
                      for h in self.hbar for lam in self.lam)


def fmt(v) -> str:
    """17 significant digits in scientific notation; integers and strings verbatim."""
    if isinstance(v, (bool, np.bool_)):
        return "true" if v else "false"
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if isinstance(v, str):
        return v
    if v is None:
        return ""
    v = float(v)
    if math.isnan(v):
        return "nan"
    if math.isinf(v):
        return "inf" if v > 0 else "-inf"
    return f"{v:.16e}"


def header_lines(command: str, cfg: SweepConfig, timestamp: bool = True) -> list:
    lines = [f"# fermitrap {command}"]
    if timestamp:
        lines.append(f"# timestamp: {_dt.datetime.now(_dt.timezone.utc).isoformat()}")
    lines.append("# config: " + json.dumps(cfg.to_dict(), sort_keys=True))
    lines.append(f"# conventions: schatten_prefactor=h^({cfg.schatten_exponent}/p) "
                 f"weight_n0={'I' if cfg.weight_zero == 'identity' else '2I'}")
    return lines


def write_csv(path, command, cfg, columns, rows, extra_header=()):
    buf = io.StringIO()
    for line in header_lines(command, cfg) + list(extra_header):
        buf.write(line + "\n")
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(columns)
    for row in rows:
        w.writerow([fmt(row[c]) for c in columns])
    text = buf.getvalue()
    if path is None or path == "-":
        return text
    with open(path, "w", encoding="utf-8", newline="") as fh:
        fh.write(text)
    return text


def _row(point, fd, report: bounds.BoundReport, n, cfg, wall_ms):
    d, beta, hbar, lam = point
    return {
        "d": d, "beta": beta, "hbar": hbar, "lambda": lam, "mu": fd.mu,
        "Z_beta": bounds.partition_closed(d, beta, hbar), "Z_mu": fd.Z_mu,
        "p": report.p, "n": n, "bound_id": report.bound_id, "lhs": report.lhs,
        "rhs": report.rhs, "ratio": report.ratio, "pass": report.passed,
        "K_used": fd.K, "tail_est": fd.tail.tail,
        "wall_ms": wall_ms if cfg.timing else 0.0,
    }


def verify_point(point, cfg: SweepConfig) -> list:
    """All selected bound reports for one (d, beta, hbar, lambda) point."""
    d, beta, hbar, lam = point
    t0 = time.perf_counter()
    pr = cfg.params(d, beta, hbar, lam)
    fd = solve_chemical_potential(pr)
    mb = maxwell_boltzmann(pr) if any(b.endswith("_mb") for b in cfg.bounds) else None
    sel = set(cfg.bounds)
    slack = cfg.slack
    reports = []
    fd_blocks = commutator_blocks(fd)
    mb_blocks = commutator_blocks(mb) if mb is not None else None
    for p in cfg.p:
        if "main" in sel:
            reports.append(bounds.main_bound(fd, p, slack, cfg.constant_scale, fd_blocks))
        if "main_mb" in sel:
            reports.append(bounds.main_bound(mb, p, slack, cfg.constant_scale, mb_blocks))
        if "split_integral" in sel:
            reports.append(bounds.split_integral(fd, p, cfg.split_order, slack, fd_blocks))
    if "linf_prop" in sel:
        reports.append(bounds.linf_proposition(fd, slack, fd_blocks))
    if "linf_prop_mb" in sel:
        reports.append(bounds.linf_proposition(mb, slack, mb_blocks))
    if "sandwich" in sel:
        reports.extend(bounds.fugacity_sandwich(fd, slack))
    if "mu_bound" in sel:
        r = bounds.mu_upper_bound(fd, slack)
        if r is not None:
            reports.append(r)
    if "sqrt_lemma" in sel:
        reports.append(bounds.sqrt_lemma(fd, 2, 4, 4, slack))
        reports.append(bounds.sqrt_lemma(fd, 2, 2, math.inf, slack))
    wall = 1e3 * (time.perf_counter() - t0)
    return [_row(point, fd, r, 0, cfg, wall) for r in reports]


def _verify_task(args):
    point, cfg = args
    return verify_point(point, cfg)


def run_grid(task, points, cfg: SweepConfig):
    """Map ``task`` over grid points; results come back in grid order."""
    jobs = [(pt, cfg) for pt in points]
    if cfg.threads > 1 and len(jobs) > 1:
        with ProcessPoolExecutor(max_workers=cfg.threads) as pool:
            return list(pool.map(task, jobs))
    return [task(j) for j in jobs]


def run_verify(cfg: SweepConfig) -> list:
    cfg.validate()
    rows = []
    for chunk in run_grid(_verify_task, cfg.grid(), cfg):
        rows.extend(chunk)
    return rows


# scaling sweeps

SCALING_COLUMNS = ("d", "beta", "hbar", "lambda", "p", "state", "lhs", "lhs_mb", "classical",
                   "K_used", "sobolev_rho", "sobolev_sqrt")


@dataclass(frozen=True)
class SlopeReport:
    variable: str
    p: float
    d: int
    slope: float
    stderr: float
    points: int
    expected: float | None

    @property
    def rel_error(self) -> float | None:
        if self.expected is None:
            return None
        return abs(self.slope - self.expected) / self.expected

    def as_dict(self):
        return {"variable": self.variable, "d": self.d,
                "p": "inf" if math.isinf(self.p) else self.p, "slope": self.slope,
                "stderr": self.stderr, "points": self.points, "expected": self.expected,
                "rel_error": self.rel_error}


def classical_slope(d: int, p: float) -> float:
    """1/2 + d/p' with p' the conjugate exponent."""
    inv_conj = 1.0 if math.isinf(p) else 1.0 - 1.0 / p
    return 0.5 + d * inv_conj


def log_slope(x, y):
    if len(x) < 4:
        raise ConfigError(f"regression needs at least 4 points, got {len(x)}")
    fit = stats.linregress(np.log(x), np.log(y))
    return float(fit.slope), float(fit.stderr)


def scaling_point(point, cfg: SweepConfig) -> list:
    d, beta, hbar, lam = point
    pr = cfg.params(d, beta, hbar, lam)
    mb = maxwell_boltzmann(pr)
    fd = solve_chemical_potential(pr) if cfg.state == "fermi_dirac" else None
    state = fd if fd is not None else mb
    blocks = commutator_blocks(state)
    mb_blocks = commutator_blocks(mb)
    rows = []
    for p in cfg.p:
        for n in cfg.n:
            sob_rho = sob_sqrt = None
            if n:
                w = WeightSpec(n, cfg.weight_zero)
                sob_rho = sobolev_norm(state, w, p, ceiling=cfg.dense_ceiling)
                sob_sqrt = sobolev_norm(state.sqrt(), w, p, state.shells,
                                        pr.schatten_dim, ceiling=cfg.dense_ceiling)
            rows.append({
                "d": d, "beta": beta, "hbar": hbar, "lambda": lam, "p": p, "state": state.kind,
                "lhs": blocks_schatten_norm(blocks, p, pr.schatten_dim),
                "lhs_mb": blocks_schatten_norm(mb_blocks, p, pr.schatten_dim),
                "classical": bounds.classical_reference_norm(d, beta, p).value,
                "K_used": state.K, "n": n, "sobolev_rho": sob_rho, "sobolev_sqrt": sob_sqrt,
            })
    return rows


def _scaling_task(args):
    point, cfg = args
    return scaling_point(point, cfg)


def run_scaling(cfg: SweepConfig, classical_cut: float = 0.1):
    """Rows plus slope reports along beta (classical regime only) and along hbar."""
    cfg.validate()
    rows = []
    for chunk in run_grid(_scaling_task, cfg.grid(), cfg):
        rows.extend(chunk)
    slopes = []
    n0 = cfg.n[0]
    groups = {}
    for r in rows:
        if r["n"] == n0:
            groups.setdefault((r["d"], r["p"], r["lambda"]), []).append(r)
    for (d, p, lam), rs in sorted(groups.items()):
        if len(cfg.beta) > 1:
            for hb in sorted(cfg.hbar):
                sel = [r for r in rs if r["hbar"] == hb and r["beta"] * hb <= classical_cut]
                s, e = log_slope([r["beta"] for r in sel], [r["lhs"] for r in sel])
                slopes.append(SlopeReport("beta", p, d, s, e, len(sel), classical_slope(d, p)))
        if len(cfg.hbar) > 1:
            for b in sorted(cfg.beta):
                sel = [r for r in rs if r["beta"] == b]
                s, e = log_slope([r["hbar"] for r in sel], [r["lhs"] for r in sel])
                slopes.append(SlopeReport("hbar", p, d, s, e, len(sel), None))
    return rows, slopes


# Wigner tables

WIGNER_COLUMNS = ("x", "xi", "f_beta", "f_marginal")
MOMENT_COLUMNS = ("d", "beta", "hbar", "n", "which", "closed", "spectral", "phase_space",
                  "rel_err_spectral", "rel_err_phase_space")


def wigner_samples(d, beta, hbar, points: int = 81, extent: float = 6.0):
    """Samples on the (x_1, xi_1) plane, other coordinates zero, plus a trapezoid mass."""
    g = PhaseSpaceGaussian(d, beta, hbar)
    L = extent / math.sqrt(g.rate)
    axis = np.linspace(-L, L, points)
    X, XI = np.meshgrid(axis, axis, indexing="ij")
    z = np.zeros(X.shape + (2 * d,))
    z[..., 0] = X
    z[..., d] = XI
    f = g.density(z)
    marg = g.marginal(X, XI)
    mass = float(np.trapezoid(np.trapezoid(marg, axis, axis=1), axis))
    rows = [{"x": float(a), "xi": float(b), "f_beta": float(c), "f_marginal": float(m)}
            for a, b, c, m in zip(X.ravel(), XI.ravel(), f.ravel(), marg.ravel())]
    return rows, mass, g


def moment_table(d, beta, hbar, ns=(0, 2, 4), tail_tol=1e-13):
    pr = ModelParams(d=d, hbar=hbar, beta=beta, tail_tol=tail_tol, tail_moment=max(ns) + 1)
    mb = maxwell_boltzmann(pr)
    g = PhaseSpaceGaussian(d, beta, hbar)
    rows = []
    for n in ns:
        closed = thermal_moment_closed(d, beta, hbar, n)
        ps = phase_space_moment(g, n)
        for which in ("x", "p"):
            spec = thermal_moment_spectral(mb, n, which)
            rows.append({"d": d, "beta": beta, "hbar": hbar, "n": n, "which": which,
                         "closed": closed, "spectral": spec, "phase_space": ps,
                         "rel_err_spectral": abs(spec - closed) / closed,
                         "rel_err_phase_space": abs(ps - closed) / closed})
    return rows
