"""Command-line front end.

Exit codes: 0 success, 1 usage/configuration/convergence error, 2 bound
violation.  Errors are reported as one JSON line on standard error.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from . import harness
from .harness import ConfigError, SweepConfig
from .thermal_states import (
    ChemicalPotentialError,
    ModelParams,
    TruncationError,
    partition_closed,
    solve_chemical_potential,
)

EXIT_OK, EXIT_ERROR, EXIT_VIOLATION = 0, 1, 2

# CLI flag -> config key for list-valued grid overrides
GRID_FLAGS = {"d": int, "beta": float, "hbar": float, "lam": float, "p": str, "n": int}


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


def _common(sp):
    sp.add_argument("--config", type=Path, help="JSON config file")
    sp.add_argument("--out", help="output CSV path ('-' for stdout)")
    sp.add_argument("--threads", type=int)
    sp.add_argument("--schatten-exponent", choices=("d", "3"), dest="schatten_exponent")
    sp.add_argument("--weight-zero", choices=("identity", "two"), dest="weight_zero")
    sp.add_argument("--dense-ceiling", type=int, dest="dense_ceiling")
    sp.add_argument("--slack", type=float)
    sp.add_argument("--tail-tol", type=float, dest="tail_tol")
    sp.add_argument("--mu-tol", type=float, dest="mu_tol")
    for name, typ in GRID_FLAGS.items():
        flag = "--lambda" if name == "lam" else f"--{name}"
        sp.add_argument(flag, dest=name, nargs="*", type=typ, metavar=name.upper())


def build_parser() -> argparse.ArgumentParser:
    ap = _Parser(prog="fermitrap",
                 description="Thermal states of the harmonic trap: norms and bound verification.")
    sub = ap.add_subparsers(dest="command", required=True, parser_class=_Parser)

    v = sub.add_parser("verify", help="run a bound verification campaign")
    _common(v)
    v.add_argument("--bounds", nargs="*", help=f"subset of {', '.join(harness.ALL_BOUNDS)}")
    v.add_argument("--timing", action="store_true", default=None,
                   help="record wall_ms (breaks byte-identical output)")
    v.add_argument("--constant-scale", type=float, dest="constant_scale",
                   help=argparse.SUPPRESS)

    s = sub.add_parser("sweep-scaling", help="norms along a beta or hbar sweep with slopes")
    _common(s)
    s.add_argument("--state", choices=("maxwell_boltzmann", "fermi_dirac"))
    s.add_argument("--classical-cut", type=float, default=0.1,
                   help="beta*hbar threshold of the classical regime")

    w = sub.add_parser("wigner", help="thermal Wigner samples and moment table")
    _common(w)
    w.add_argument("--points", type=int, default=81)
    w.add_argument("--extent", type=float, default=6.0)

    m = sub.add_parser("mu-solve", help="chemical potential for one configuration")
    m.add_argument("--d", type=int, required=True)
    m.add_argument("--beta", type=float, required=True)
    m.add_argument("--hbar", type=float, required=True)
    m.add_argument("--lambda", dest="lam", type=float, default=1.0)
    m.add_argument("--tail-tol", type=float, default=1e-13, dest="tail_tol")
    m.add_argument("--mu-tol", type=float, default=1e-13, dest="mu_tol")

    t = sub.add_parser("selftest", help="oracle-equivalence suite on small cases")
    t.add_argument("--dense-ceiling", type=int, default=4000, dest="dense_ceiling")
    return ap


def resolve_config(args, defaults: SweepConfig | None = None) -> SweepConfig:
    """Defaults, then the config file, then explicit CLI flags."""
    data = (defaults or SweepConfig()).to_dict()
    if getattr(args, "config", None) is not None:
        try:
            loaded = json.loads(args.config.read_text(encoding="utf-8"))
        except (OSError, json.JSONDecodeError) as exc:
            raise ConfigError(f"cannot read config {args.config}: {exc}") from exc
        if not isinstance(loaded, dict):
            raise ConfigError("config file must hold a JSON object")
        data.update(loaded)
    keys = set(vars(SweepConfig()).keys())
    for key, val in vars(args).items():
        if key in keys and val is not None:
            data[key] = val
    return SweepConfig.from_dict(data).validate()


def _emit_error(kind: str, message: str, **extra):
    print(json.dumps({"error": kind, "message": message, **extra}), file=sys.stderr)


def _finish_csv(cfg, command, columns, rows, extra_header=()):
    text = harness.write_csv(cfg.out, command, cfg, columns, rows, extra_header)
    if cfg.out in (None, "-"):
        sys.stdout.write(text)


def cmd_verify(args) -> int:
    cfg = resolve_config(args)
    rows = harness.run_verify(cfg)
    _finish_csv(cfg, "verify", harness.VERIFY_COLUMNS, rows)
    failed = [r for r in rows if not r["pass"]]
    summary = {"rows": len(rows), "failed": len(failed),
               "max_ratio": max((r["ratio"] for r in rows), default=0.0)}
    print(json.dumps(summary), file=sys.stderr if cfg.out in (None, "-") else sys.stdout)
    if failed:
        worst = max(failed, key=lambda r: r["ratio"])
        _emit_error("bound_violation", f"{len(failed)} rows exceed 1 + slack",
                    worst_bound=worst["bound_id"], worst_ratio=worst["ratio"])
        return EXIT_VIOLATION
    return EXIT_OK


def cmd_sweep_scaling(args) -> int:
    defaults = SweepConfig(d=[1], beta=[0.5, 1.0, 2.0, 4.0, 8.0], hbar=[1e-3], lam=[1.0],
                           p=[2.0])
    cfg = resolve_config(args, defaults)
    rows, slopes = harness.run_scaling(cfg, args.classical_cut)
    extra = ["# slope: " + json.dumps(s.as_dict(), sort_keys=True) for s in slopes]
    _finish_csv(cfg, "sweep-scaling", harness.SCALING_COLUMNS + ("n",), rows, extra)
    for s in slopes:
        print(json.dumps(s.as_dict()), file=sys.stderr if cfg.out in (None, "-") else sys.stdout)
    return EXIT_OK


def cmd_wigner(args) -> int:
    defaults = SweepConfig(d=[1], beta=[1.0], hbar=[0.5], lam=[1.0], p=[2.0])
    cfg = resolve_config(args, defaults)
    d, beta, hbar = cfg.d[0], cfg.beta[0], cfg.hbar[0]
    samples, mass, g = harness.wigner_samples(d, beta, hbar, args.points, args.extent)
    moments = harness.moment_table(d, beta, hbar, tail_tol=cfg.tail_tol)
    extra = [f"# peak: {harness.fmt(g.prefactor)}", f"# marginal_mass: {harness.fmt(mass)}"]
    _finish_csv(cfg, "wigner", harness.WIGNER_COLUMNS, samples, extra)
    if cfg.out not in (None, "-"):
        mpath = str(Path(cfg.out).with_suffix("")) + ".moments.csv"
        harness.write_csv(mpath, "wigner-moments", cfg, harness.MOMENT_COLUMNS, moments)
    worst = max(max(r["rel_err_spectral"], r["rel_err_phase_space"]) for r in moments)
    out = sys.stderr if cfg.out in (None, "-") else sys.stdout
    print(json.dumps({"marginal_mass": mass, "peak": g.prefactor, "max_moment_rel_err": worst}),
          file=out)
    return EXIT_OK


def cmd_mu_solve(args) -> int:
    pr = ModelParams(d=args.d, hbar=args.hbar, beta=args.beta, lam=args.lam,
                     tail_tol=args.tail_tol, mu_tol=args.mu_tol)
    prof = solve_chemical_potential(pr)
    print(json.dumps({"d": pr.d, "beta": pr.beta, "hbar": pr.hbar, "lambda": pr.lam,
                      "N": pr.N, "mu": prof.mu, "Z_mu": prof.Z_mu,
                      "Z_beta": partition_closed(pr.d, pr.beta, pr.hbar),
                      "K_used": prof.K, "tail_est": prof.tail.tail}))
    return EXIT_OK


def cmd_selftest(args) -> int:
    from .selftest import run_selftest

    results = run_selftest(ceiling=args.dense_ceiling)
    for name, ok, err in results:
        print(f"{'PASS' if ok else 'FAIL'} {name} max_err={err:.3e}")
    return EXIT_OK if all(ok for _, ok, _ in results) else EXIT_VIOLATION


COMMANDS = {"verify": cmd_verify, "sweep-scaling": cmd_sweep_scaling, "wigner": cmd_wigner,
            "mu-solve": cmd_mu_solve, "selftest": cmd_selftest}


def main(argv=None) -> int:
    try:
        args = build_parser().parse_args(argv)
        return COMMANDS[args.command](args)
    except UsageError as exc:
        _emit_error("usage", str(exc))
    except ConfigError as exc:
        _emit_error("config", str(exc))
    except (TruncationError, ChemicalPotentialError, ArithmeticError) as exc:
        _emit_error("convergence", str(exc))
    except ValueError as exc:
        _emit_error("value", str(exc))
    return EXIT_ERROR


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
