"""Command-line front end: ``analyze``, ``constants``, ``kernel`` and ``verify``.

Exit codes: 0 everything passed, 1 a mathematical check failed, 2 a numeric
or usage error.
"""

from __future__ import annotations

import argparse
import json
import logging
import math
import sys
from pathlib import Path

from .config import Config, config_from_dict, load_config, parse_profile_shortcut
from .errors import BergmanError, ConfigError, DomainError, UnconvergedError
from .geometry import audit_psi, compute_H
from .kernel import kernel_diag
from .profile import check_conditions, check_doubling, check_ratio_fact, derive_constants
from .sweep import _jsonable, run_sweep, write_csv, write_json

log = logging.getLogger("bergman_growth")

EXIT_OK, EXIT_FAIL, EXIT_ERROR = 0, 1, 2


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_ERROR, f"{self.prog}: error: {message}\n")


def _positive(text):
    try:
        x = float(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"not a number: {text!r}")
    if not (x > 0 and math.isfinite(x)):
        raise argparse.ArgumentTypeError(f"must be positive and finite: {text!r}")
    return x


def _common(p):
    src = p.add_mutually_exclusive_group(required=True)
    src.add_argument("--config", type=Path, help="TOML configuration file")
    src.add_argument("--profile", help="shortcut instead of a config: exp_beta:BETA, double_exp, power:2M")
    p.add_argument("--tol", type=_positive, help="relative tolerance (overrides the config)")
    p.add_argument("--precision", choices=("double", "high"), help="arithmetic for kernel evaluations")
    p.add_argument("--out", type=Path, help="directory for CSV/JSON output")
    p.add_argument("--seed", type=int, help="seed for the Monte-Carlo geometry audit")
    p.add_argument("--jobs", type=int, default=1, help="worker processes for sweeps")
    p.add_argument("-v", "--verbose", action="store_true")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="bergman-growth",
                     description="Diagonal Bergman kernel of {Im w > f(|z|)} and its growth near 0.")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)
    for name, text in (("analyze", "check the hypotheses on f and derive the constants"),
                       ("constants", "print derived constants and thresholds as JSON"),
                       ("kernel", "evaluate K at one point (z, it)"),
                       ("verify", "kernel sweep over the configured t-ladder with verdicts")):
        p = sub.add_parser(name, help=text)
        _common(p)
        if name == "kernel":
            p.add_argument("--z", type=complex, default=0j, help="z coordinate (only |z| matters)")
            p.add_argument("--t", type=float, required=True, help="Im w")
        if name == "analyze":
            p.add_argument("--audit-points", type=int, default=10_000,
                           help="sample size of the Psi audit (run when --seed is given)")
    return parser


def _load(args) -> Config:
    if args.config is not None:
        return load_config(args.config)
    return config_from_dict({"profile": parse_profile_shortcut(args.profile)},
                            source=f"--profile {args.profile}")


def _dump(obj, path: Path):
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(json.dumps(_jsonable(obj), indent=2, sort_keys=True) + "\n")


def _analysis(cfg: Config, seed=None, n_audit=10_000):
    prof, wit = cfg.profile, cfg.witness
    cond = check_conditions(prof, wit)
    const = derive_constants(wit, prof)
    lines = [f"{c.name}: {'PASS' if c.passed else 'FAIL'}  (margin {c.margin:.3g}; {c.detail})"
             for c in cond.checks]
    out = {"profile": prof.label(), "source": cfg.source, "conditions": cond.to_dict(),
           "constants": const.to_dict()}
    ok = cond.passed
    if cond.passed:
        dbl = check_doubling(prof, const)
        rat = check_ratio_fact(prof, wit, const)
        lines.append(f"doubling below T: {'PASS' if dbl.passed else 'FAIL'}  "
                     f"(K={dbl.K:.4g}, observed {dbl.empirical_K:.4g})")
        lines.append(f"ratio bound B^p: {'PASS' if rat.passed else 'FAIL'}  "
                     f"(worst {max(rat.ratio_worst.values(), default=float('nan')):.4g})")
        out["doubling"] = {"passed": dbl.passed, "K": dbl.K, "empirical_K": dbl.empirical_K,
                           "M": dbl.M, "empirical_M": dbl.empirical_M, "n_points": dbl.n_points}
        out["ratio_fact"] = {"passed": rat.passed, "sandwich_margin": rat.sandwich_margin,
                             "ratio_worst": {str(k): v for k, v in rat.ratio_worst.items()}}
        ok = ok and dbl.passed and rat.passed
        if seed is not None:
            audit = audit_psi(prof, const, n_audit, seed)
            lines.append(f"Psi audit ({audit.n} points, seed {seed}): "
                         f"{'PASS' if audit.passed else 'FAIL'}  (sup|psi1|^2={audit.sup_psi1_sq:.4g} "
                         f"<= {audit.bound_psi1_sq:.4g}, sup|psi2|={audit.sup_psi2:.17g})")
            out["psi_audit"] = audit.to_dict()
            ok = ok and audit.passed
    out["passed"] = ok
    return out, lines, const


def _print_constants(const, thr=None):
    print(f"M = {const.M:.10g}")
    print(f"mu = {const.mu:.10g}")
    print(f"C1 = {const.C1:.10g}")
    print(f"K = {const.K:.10g}")
    print(f"T = {const.T:.10g}")
    if thr is not None:
        print(f"H_(N,alpha) = {thr.H_Nalpha:.6g}  (binding: {thr.binding.get('H_Nalpha')})")
        print(f"R_cmp = {thr.R_cmp:.6g}")
        print(f"H0 = {thr.H0:.6g}")


def cmd_analyze(args) -> int:
    cfg = _load(args)
    out, lines, const = _analysis(cfg, args.seed, args.audit_points)
    print(f"profile: {out['profile']}")
    for line in lines:
        print(line)
    thr = None
    if out["conditions"]["passed"]:
        thr = compute_H(cfg.profile, const, cfg.region)
        out["thresholds"] = thr.to_dict()
    _print_constants(const, thr)
    if args.out:
        _dump(out, args.out / "analyze.json")
    return EXIT_OK if out["passed"] else EXIT_FAIL


def cmd_constants(args) -> int:
    cfg = _load(args)
    const = derive_constants(cfg.witness, cfg.profile)
    thr = compute_H(cfg.profile, const, cfg.region)
    out = {"profile": cfg.profile.label(), "constants": const.to_dict(), "thresholds": thr.to_dict(),
           "region": {"alpha": cfg.region.alpha, "N": cfg.region.N}}
    print(json.dumps(_jsonable(out), indent=2, sort_keys=True))
    if args.out:
        _dump(out, args.out / "constants.json")
    return EXIT_OK


def cmd_kernel(args) -> int:
    if not (args.t > 0 and math.isfinite(args.t)):
        print("error: t must be positive", file=sys.stderr)
        return EXIT_ERROR
    cfg = _load(args)
    tol = args.tol or 1e-8
    ev = kernel_diag(cfg.profile, args.z, args.t, tol=tol, precision=args.precision or "double")
    print(f"profile: {cfg.profile.label()}")
    print(f"|z| = {abs(args.z):.17g}, t = {args.t:.17g}")
    print(f"K = {ev.value:.12g}")
    print(f"log10 K = {ev.log10:.12g}")
    print(f"rel_err = {ev.rel_err:.3g}  (tol {tol:g}, {ev.precision})")
    print(f"series terms = {ev.n_max_used}, tau nodes = {ev.tau_nodes_used}")
    for w in ev.warnings:
        print(f"warning: {w}")
    if args.out:
        _dump(ev.to_dict(), args.out / "kernel.json")
    return EXIT_OK


def cmd_verify(args) -> int:
    cfg = _load(args)
    if cfg.sweep is None:
        raise ConfigError("verify needs a [sweep] section")
    spec = cfg.sweep
    if args.tol or args.precision:
        from dataclasses import replace
        spec = replace(spec, tol=args.tol or spec.tol, precision=args.precision or spec.precision)
    out, lines, const = _analysis(cfg)
    if not out["passed"]:
        for line in lines:
            print(line)
        print("hypotheses not satisfied; no sweep run")
        return EXIT_FAIL
    report = run_sweep(cfg.profile, const, spec, cfg.policy, jobs=args.jobs, seed=args.seed)
    out_dir = args.out or Path(".")
    out_dir.mkdir(parents=True, exist_ok=True)
    write_csv(report, out_dir / "sweep.csv")
    write_json(report, out_dir / "summary.json")
    s = report.summary
    print(f"profile: {report.profile}")
    print(f"rows: {s['n_rows']}, unconverged: {s['n_unconverged']}")
    if s["slope"] is not None:
        print(f"rho(0,t) in [{s['min_rho']:.4g}, {s['max_rho']:.4g}], slope {s['slope']:.3g}")
    for name, v in report.verdicts.items():
        val = "-" if v["value"] is None else f"{v['value']:.4g}"
        print(f"{name}: {v['status'].upper()}  (value {val}, cap {v['cap']})")
    print(f"wrote {out_dir / 'sweep.csv'} and {out_dir / 'summary.json'}")
    return report.exit_code


COMMANDS = {"analyze": cmd_analyze, "constants": cmd_constants, "kernel": cmd_kernel,
            "verify": cmd_verify}


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return COMMANDS[args.command](args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
    except UnconvergedError as exc:
        print(f"unconverged: {exc}", file=sys.stderr)
    except DomainError as exc:
        print(f"domain error: {exc}", file=sys.stderr)
    except BergmanError as exc:
        print(f"numeric error: {exc}", file=sys.stderr)
    return EXIT_ERROR


if __name__ == "__main__":
    sys.exit(main())
