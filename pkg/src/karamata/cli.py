"""Command-line driver.

Exit status: 0 when the verdict passes, 2 when it fails, 1 on any error.
"""

from __future__ import annotations

import argparse
import sys

from . import __version__, report, smooth, verify
from .core import GridSpec
from .dsl import parse
from .errors import KaramataError
from .quadrature import CheckConfig

DEFAULT_GRID = "1e-8:1e8:16"
DEFAULT_EPS = "0.25,0.5,1,2"

EXIT_PASS, EXIT_ERROR, EXIT_FAIL = 0, 1, 2


def grid_arg(text):
    """``MIN:MAX:PPD`` in raw ``t``."""
    try:
        lo, hi, ppd = text.split(":")
        return GridSpec.from_t(float(lo), float(hi), int(ppd))
    except ValueError as exc:
        raise argparse.ArgumentTypeError(f"bad grid {text!r} (want MIN:MAX:PPD): {exc}")


def floats_arg(text):
    try:
        return [float(x) for x in text.split(",") if x.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"bad number list {text!r}")


def order_arg(text):
    n = int(text)
    if n < 0:
        raise argparse.ArgumentTypeError(f"derivative order must be >= 0, got {n}")
    return n


def build_parser():
    p = argparse.ArgumentParser(prog="karamata", description=__doc__.splitlines()[0])
    p.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = p.add_subparsers(dest="command", required=True)

    def command(name, help):
        sp = sub.add_parser(name, help=help)
        sp.add_argument("--expr", required=True, help="expression in the DSL")
        return sp

    sp = command("check", "LEFF ratios for each epsilon")
    sp.add_argument("--eps", type=floats_arg, default=floats_arg(DEFAULT_EPS))
    sp.add_argument("--grid", type=grid_arg, default=grid_arg(DEFAULT_GRID))
    sp.add_argument("--ceiling", type=float, default=verify.DEFAULT_CEILING)
    sp.add_argument("--sup", action="store_true", help="also check the running suprema")
    sp.add_argument("--out", help="JSON report path")

    sp = command("scaling", "minimal constant in the scaling inequality")
    sp.add_argument("--factors", type=floats_arg, required=True)
    sp.add_argument("--eps", type=float, required=True)
    sp.add_argument("--grid", type=grid_arg, default=grid_arg(DEFAULT_GRID))
    sp.add_argument("--out")

    sp = command("witness", "sample a monotone witness")
    sp.add_argument("--eps", type=float, required=True)
    sp.add_argument("--sign", choices=["+", "-"], default="+")
    sp.add_argument("--grid", type=grid_arg, default=grid_arg(DEFAULT_GRID))
    sp.add_argument("--sample", type=grid_arg, default=grid_arg(DEFAULT_GRID),
                    help="CSV sample grid MIN:MAX:PPD")
    sp.add_argument("--ceiling", type=float, default=verify.DEFAULT_CEILING)
    sp.add_argument("--out", help="CSV path")
    sp.add_argument("--report", help="JSON report path")

    sp = command("smooth", "smooth equivalent and its derivatives")
    sp.add_argument("--deriv", type=order_arg, default=2, help="highest derivative in the CSV")
    sp.add_argument("--sample", type=grid_arg, default=grid_arg(DEFAULT_GRID),
                    help="CSV sample grid MIN:MAX:PPD")
    sp.add_argument("--grid", type=grid_arg, default=grid_arg(DEFAULT_GRID),
                    help="certification grid MIN:MAX:PPD")
    sp.add_argument("--ceiling", type=float, default=verify.DEFAULT_CEILING)
    sp.add_argument("--out", help="CSV path")
    sp.add_argument("--report", help="JSON report path")

    sp = command("limits", "trends of t**alpha b(t) and its integrals")
    sp.add_argument("--alpha", type=float, required=True)
    sp.add_argument("--out")

    sp = command("conjecture", "exploratory look at t c'(t) for the smooth equivalent")
    sp.add_argument("--grid", type=grid_arg, default=grid_arg(DEFAULT_GRID))
    sp.add_argument("--out")
    return p


def _save(run, path, passed):
    run.finish()
    if path:
        report.write_json(run, path)
    return EXIT_PASS if passed else EXIT_FAIL


def run_check(args, e, cfg, run):
    results = verify.check_sv(e, args.eps, args.grid, cfg, args.ceiling, include_sup=args.sup)
    run.add("check_sv", results)
    for eps, r in results.items():
        verdict = "pass" if r.passed else "FAIL"
        print(f"eps={eps:g}: C_low={r.c_low:.6g} C_high={r.c_high:.6g} {verdict} {r.reason}".rstrip())
    return _save(run, args.out, all(r.passed for r in results.values()))


def run_scaling(args, e, cfg, run):
    r = run.add("scaling", verify.check_scaling(e, args.factors, args.eps, args.grid, cfg))
    print(f"C_eps={r.c_eps!r} worst at u={r.worst_t_log:.6g}, c={r.worst_factor:g}; "
          f"re-validated={r.validated}")
    return _save(run, args.out, r.validated)


def run_witness(args, e, cfg, run):
    node, r = verify.monotone_witness(e, args.eps, args.sign, args.grid, cfg, args.ceiling)
    run.add("witness", r)
    if args.out:
        report.write_samples_csv(node, args.sample, 0, args.out, cfg)
    print(f"{node}: C_low={r.c_low:.6g} C_high={r.c_high:.6g} {'pass' if r.passed else 'FAIL'}")
    return _save(run, args.report, r.passed)


def run_smooth(args, e, cfg, run):
    c, r = smooth.smooth_equivalent(e, cfg, args.grid, n_max=max(args.deriv, 1),
                                    ceiling=args.ceiling)
    run.add("smooth", report.pipeline_summary(e, c))
    if args.out:
        report.write_samples_csv(c, args.sample, args.deriv, args.out)
    print(f"c/b in [{r.c_low:.6g}, {r.c_high:.6g}] {'pass' if r.passed else 'FAIL'}")
    return _save(run, args.report, r.passed)


def run_limits(args, e, cfg, run):
    r = run.add("limits", verify.limit_diagnostics(e, args.alpha, cfg))
    print(f"t->0: {r.zero_trend} (forced {r.zero_expected}); "
          f"t->inf: {r.infinity_trend} (forced {r.infinity_expected})")
    print(f"int_0^1: {r.integral_0_1} (forced {r.integral_0_1_expected}); "
          f"int_1^inf: {r.integral_1_inf} (forced {r.integral_1_inf_expected})")
    return _save(run, args.out, r.consistent)


def run_conjecture(args, e, cfg, run):
    c, _ = smooth.smooth_equivalent(e, cfg, args.grid)
    d = run.add("conjecture", smooth.derivative_ratio_diagnostic(c, args.grid, cfg))
    print(f"{d.label}: identically zero={d.identically_zero}, "
          f"sign changes={d.sign_changes}, orientation={d.orientation}")
    _save(run, args.out, True)
    return EXIT_PASS


COMMANDS = {
    "check": run_check,
    "scaling": run_scaling,
    "witness": run_witness,
    "smooth": run_smooth,
    "limits": run_limits,
    "conjecture": run_conjecture,
}


def main(argv=None):
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        # argparse exits 2 on usage errors, which would read as a fail verdict
        return EXIT_PASS if exc.code == 0 else EXIT_ERROR
    try:
        cfg = CheckConfig.from_env()
        e = parse(args.expr)
        run = report.RunReport(expr=str(e), config=cfg)
        return COMMANDS[args.command](args, e, cfg, run)
    except (KaramataError, ValueError, OSError) as exc:
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_ERROR


if __name__ == "__main__":
    sys.exit(main())
