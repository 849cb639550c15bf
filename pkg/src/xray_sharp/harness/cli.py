"""Command-line entry point ``xray-sharp``.

Exit codes: 0 when the experiment passes, 1 when it fails, 2 on usage
errors, unreadable or invalid configs.
"""

from __future__ import annotations

import argparse
import json
import os
import sys

from .. import set_threads
from ..errors import XraySharpError
from .config import CURVES, EXPERIMENTS, ExperimentConfig, curve_from_spec
from .run import COLUMNS, ExperimentError, run

EXIT_PASS, EXIT_FAIL, EXIT_USAGE = 0, 1, 2


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        print(f"{self.prog}: error: {message}", file=sys.stderr)
        raise SystemExit(EXIT_USAGE)


def build_parser() -> argparse.ArgumentParser:
    def flags(suppress: bool) -> argparse.ArgumentParser:
        # subcommand copies must not overwrite values given before the subcommand
        dflt = (lambda v: argparse.SUPPRESS) if suppress else (lambda v: v)
        p = argparse.ArgumentParser(add_help=False)
        p.add_argument("--seed", type=int, default=dflt(None), help="override the config seed")
        p.add_argument("--threads", type=int, default=dflt(None), help="worker threads (env XRAY_SHARP_THREADS)")
        p.add_argument("--out", default=dflt(None), help="output root (default: config 'output' or ./out)")
        p.add_argument("--quiet", action="store_true", default=dflt(False), help="suppress the summary")
        return p

    top, common = flags(False), flags(True)

    ap = _Parser(prog="xray-sharp", description="Numerical experiments for restricted X-ray transforms.", parents=[top])
    sub = ap.add_subparsers(dest="command", parser_class=_Parser)

    p_run = sub.add_parser("run", help="run an experiment config", parents=[common])
    p_run.add_argument("config")

    p_cc = sub.add_parser("check-curve", help="nondegeneracy, type and size of a named curve", parents=[common])
    p_cc.add_argument("name", choices=CURVES)
    p_cc.add_argument("--d", type=int, default=2)
    p_cc.add_argument("--exponents", type=int, nargs="+", default=None)
    p_cc.add_argument("--eps", type=float, default=0.05)

    p_tab = sub.add_parser("table", help="print the exponent table", parents=[common])
    p_tab.add_argument("--d", type=int, required=True)
    p_tab.add_argument("--p", type=float, required=True)
    p_tab.add_argument("--L", type=int, default=None)

    sub.add_parser("list-experiments", help="experiment names and CSV columns", parents=[common])
    return ap


def _cmd_run(args) -> int:
    if not os.path.isfile(args.config):
        print(f"xray-sharp: config not found: {args.config}", file=sys.stderr)
        return EXIT_USAGE
    try:
        cfg = ExperimentConfig.load(args.config)
    except XraySharpError as exc:
        print(f"xray-sharp: {exc}", file=sys.stderr)
        return EXIT_USAGE
    if args.seed is not None:
        cfg = ExperimentConfig(cfg.experiment, cfg.curve, cfg.grid, cfg.sweep, args.seed, cfg.output)
    try:
        report = run(cfg, out=args.out)
    except ExperimentError as exc:
        print(f"xray-sharp: {exc}", file=sys.stderr)
        return EXIT_FAIL
    if not args.quiet:
        fit = report.fit
        line = f"{report.experiment}: {report.verdict}"
        if fit is not None:
            line += f" (slope {fit['slope']:.4f}, r2 {fit['r2']:.4f}; predicted {report.prediction.slope:.4f} +/- {report.prediction.tolerance:.4f})"
        print(line)
        print(f"output: {report.details.get('output_dir')}")
    return EXIT_PASS if report.passed else EXIT_FAIL


def _cmd_check_curve(args) -> int:
    from ..curves import check_nondegenerate, curve_bound, max_type

    spec = {"name": args.name, "d": args.d, "eps": args.eps}
    if args.exponents:
        spec["exponents"] = args.exponents
    try:
        curve = curve_from_spec(spec)
        nondeg, wmin = check_nondegenerate(curve)
        L = max_type(curve)
        B = curve_bound(curve).B
    except XraySharpError as exc:
        print(f"xray-sharp: {exc}", file=sys.stderr)
        return EXIT_USAGE
    print(json.dumps({"curve": curve.label, "d": curve.dim, "nondegenerate": nondeg, "min_wronskian": wmin, "max_type": L, "B": B}))
    return EXIT_PASS


def _cmd_table(args) -> int:
    from ..witnesses import exponent_table

    try:
        tab = exponent_table(args.d, args.p, args.L)
    except XraySharpError as exc:
        print(f"xray-sharp: {exc}", file=sys.stderr)
        return EXIT_USAGE
    print(f"d = {tab.d}  p = {tab.p:g}  L = {tab.L}")
    print(f"p_d         = {tab.p_d!r}")
    print(f"alpha       = {tab.alpha!r}")
    print(f"alpha_tilde = {tab.alpha_tilde!r}")
    print(f"necessary   = {tab.necessary!r}")
    return EXIT_PASS


def _cmd_list(_args) -> int:
    for name in EXPERIMENTS:
        print(f"{name:16s} columns: {','.join(COLUMNS[name])}")
    return EXIT_PASS


def main(argv=None) -> int:
    ap = build_parser()
    try:
        args = ap.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code) if isinstance(exc.code, int) else EXIT_USAGE
    if args.command is None:
        ap.print_usage(sys.stderr)
        return EXIT_USAGE
    try:
        set_threads(args.threads)
    except ValueError as exc:
        print(f"xray-sharp: {exc}", file=sys.stderr)
        return EXIT_USAGE
    handler = {"run": _cmd_run, "check-curve": _cmd_check_curve, "table": _cmd_table, "list-experiments": _cmd_list}
    return handler[args.command](args)


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
