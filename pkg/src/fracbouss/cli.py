"""Command-line entry point ``fbsq``.

Exit codes: 0 success, 1 invalid configuration or arguments (also failed
property suites), 2 non-finite state, 3 I/O failure, 4 unresolvable fit window.
"""

from __future__ import annotations

import argparse
import csv
import json
import math
import os
import sys
import time

from . import admissibility as adm
from . import config as cfgmod
from . import diagnostics as dg
from . import littlewood_paley as lp
from . import runner
from .errors import (CFLViolation, ConfigInvalid, MissingColumn, NonFiniteState,
                     PreconditionViolated, TooFewSamples, WindowUnresolvable)

EXIT_CONFIG, EXIT_NONFINITE, EXIT_IO, EXIT_FIT = 1, 2, 3, 4


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_CONFIG, f"{self.prog}: error: {message}\n")


def _range(text):
    try:
        parts = [float(x) for x in text.split(":")]
    except ValueError:
        raise argparse.ArgumentTypeError(f"bad range {text!r}") from None
    return parts


def _load_cfg(path, overrides):
    cfg = cfgmod.load(path)
    for item in overrides or []:
        if "=" not in item:
            raise ConfigInvalid(f"--set expects key=value, got {item!r}")
        k, v = item.split("=", 1)
        cfg.set(k.strip(), v)
    return cfgmod.validate(cfg)


def _emit(obj, path=None):
    text = json.dumps(runner._finite(obj), indent=2, sort_keys=True, ensure_ascii=False)
    if path:
        try:
            with open(path, "w", encoding="utf-8") as fh:
                fh.write(text + "\n")
        except OSError as exc:
            raise runner.IOFailure(str(exc)) from None
    else:
        print(text)


# ---------------------------------------------------------------- simulate

def cmd_simulate(args):
    cfg = _load_cfg(args.config, args.set)
    out = args.out or cfg.output.dir
    t0 = time.perf_counter()
    try:
        res = runner.run_simulation(cfg, out)
    except NonFiniteState as exc:
        print(f"non-finite state after t={exc.t}; partial diagnostics in {out}", file=sys.stderr)
        return EXIT_NONFINITE
    s = res.summary
    print(f"finished t={res.final.t:g} in {time.perf_counter() - t0:.1f} s; artifacts in {out}")
    for k, v in s["balance_residuals"].items():
        print(f"  {k:24s} {v}")
    fit = s["decay_fit"]
    if "fitted_slope" in fit:
        print(f"  decay slope {fit['fitted_slope']:.4f} (bound {fit['theoretical_slope']:.4f})")
    else:
        print(f"  decay fit: {fit['message']}")
    return 0


# ---------------------------------------------------------------- admissible

def _print_alpha(alpha, epsilon, C_mu):
    qw = adm.q_window(alpha) if alpha - 2 / 3 > adm.MARGIN and alpha <= 1 + adm.MARGIN else None
    print(f"alpha = {alpha:g}")
    if qw is None:
        print(f"  empty region (binding constraint: {adm.binding_constraint(alpha)})")
        return
    qm = 0.5 * (qw[0] + qw[1])
    sw = adm.s0_window(alpha, qm)
    print(f"  q-window      ({qw[0]:.6g}, {qw[1]:.6g})")
    print(f"  s0-window     ({3 - 2 * alpha:.6g}, {4 * alpha:g}/q - {8 * alpha - 6:.6g})"
          f"   at q={qm:.6g}: {sw}")
    print(f"  p             > {adm.p_lower(alpha):.6g}"
          + (f" and p < 1/(C_mu eps) = {1 / (C_mu * epsilon):.6g} (soft)" if epsilon * C_mu > 0 else ""))
    dv = adm.discrepancy_values(alpha)
    print(f"  decay_d2 set: q < {dv['q_upper_decay_d2']:.6g}, s0 > {dv['s0_lower_decay_d2']:.6g}")


def cmd_admissible(args):
    if args.alpha is None and args.scan is None:
        raise ConfigInvalid("give --alpha or --scan")
    if args.scan is not None:
        if len(args.scan) != 3 or args.scan[2] <= 0:
            raise ConfigInvalid("--scan expects lo:hi:step with step > 0")
        lo, hi, step = args.scan
        n = int(math.floor((hi - lo) / step + 1e-9))
        alphas = [round(lo + i * step, 12) for i in range(n + 1)]
    else:
        alphas = [args.alpha]
    rep = adm.scan_report(alphas, args.q_steps, args.s0_steps, args.p_samples,
                          args.epsilon, args.C_mu)
    if args.scan is not None:
        fh = open(args.csv, "w", newline="", encoding="utf-8") if args.csv else sys.stdout
        w = csv.writer(fh)
        w.writerow(["alpha", "q_lo", "q_hi", "s0_lo_mid_q", "s0_hi_mid_q", "p_lower",
                    "n_passing", "empty", "binding", "exact_confirmed"])
        for s in rep["summaries"]:
            qw = s["q_window"] or ["", ""]
            sw = s["s0_window_mid_q"] or ["", ""]
            w.writerow([s["alpha"], *qw, *sw, s["p_lower"], s["n_passing"], s["empty"],
                        s["binding"] or "", not s["exact_mismatches"]])
        if args.csv:
            fh.close()
    else:
        _print_alpha(args.alpha, args.epsilon, args.C_mu)
    for line in rep["discrepancies"]:
        print(line, file=sys.stderr if args.scan is not None and not args.csv else sys.stdout)
    if args.json:
        _emit(rep, args.json)
    return 0


# ---------------------------------------------------------------- fit-decay

def _box_length(csv_path, given):
    if given is not None:
        return given
    cfg_path = os.path.join(os.path.dirname(os.path.abspath(csv_path)), "config.ini")
    if os.path.exists(cfg_path):
        return cfgmod.load(cfg_path).grid.L
    raise ConfigInvalid("box length unknown: pass --L or keep config.ini next to the CSV")


def cmd_fit_decay(args):
    try:
        series = dg.read_csv(args.csv)
    except OSError as exc:
        raise runner.IOFailure(str(exc)) from None
    if len(args.window) != 2:
        raise ConfigInvalid("--window expects t_a:t_b")
    L = _box_length(args.csv, args.L)
    try:
        fit = dg.fit_decay(series, args.window, args.alpha, args.s0, L, args.beta, args.gate,
                           args.column)
    except (WindowUnresolvable, TooFewSamples) as exc:
        print(f"{type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_FIT
    except MissingColumn as exc:
        print(f"missing column {exc}", file=sys.stderr)
        return EXIT_CONFIG
    _emit(fit.to_dict(), args.json)
    return 0


# ---------------------------------------------------------------- verify-lp

def cmd_verify_lp(args):
    rep = lp.verify_suite(args.samples, args.grid, args.seed, args.L, args.alpha,
                          _fault=args.fault)
    _emit(rep, args.json)
    if args.json:
        for name, s in rep["suites"].items():
            print(f"{name:22s} {'pass' if s['passed'] else 'FAIL'}")
    return 0 if rep["passed"] else 1


# ---------------------------------------------------------------- stability

def cmd_stability(args):
    cfg = _load_cfg(args.config, args.set)
    T = args.T if args.T is not None else cfg.time.T_end
    res = runner.run_stability(cfg, args.delta, T=T, dt=args.dt)
    rep = {"delta": args.delta, "gamma": res.gamma, "T": T, "growth_factor": res.growth_factor,
           "K_envelope": res.K_envelope, "K_fit": res.K_fit, "Y0": res.Y[0], "YT": res.Y[-1]}
    if args.scaling and args.delta > 0:
        half = runner.run_stability(cfg, args.delta / 2, T=T, dt=args.dt)
        nz = half.Y > 0
        ratio = (res.sqrtY()[nz] / half.sqrtY()[nz]) if nz.any() else []
        rep["sqrtY_ratio_min"] = float(min(ratio)) if len(ratio) else None
        rep["sqrtY_ratio_max"] = float(max(ratio)) if len(ratio) else None
    if args.out:
        runner._ensure_dir(args.out)
        try:
            with open(os.path.join(args.out, "stability.csv"), "w", newline="") as fh:
                w = csv.writer(fh)
                w.writerow(["t", "Y", "sup_du2", "sup_dtheta2", "sup_dtheta_besov2"])
                for row in zip(res.t, res.Y, res.du2, res.dth2, res.dth_besov2):
                    w.writerow(["%.17g" % v for v in row])
        except OSError as exc:
            raise runner.IOFailure(str(exc)) from None
        _emit(rep, os.path.join(args.out, "stability.json"))
    _emit(rep)
    return 0


# ---------------------------------------------------------------- wiring

def build_parser():
    p = _Parser(prog="fbsq", description=__doc__.splitlines()[0])
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    s = sub.add_parser("simulate", help="run a configured simulation")
    s.add_argument("config")
    s.add_argument("--out", help="output directory (default: output.dir)")
    s.add_argument("--set", action="append", metavar="KEY=VALUE", help="override a config key")
    s.set_defaults(func=cmd_simulate)

    a = sub.add_parser("admissible", help="parameter windows and alpha scans")
    a.add_argument("--alpha", type=float)
    a.add_argument("--scan", type=_range, metavar="LO:HI:STEP")
    a.add_argument("--epsilon", type=float, default=0.0)
    a.add_argument("--C-mu", dest="C_mu", type=float, default=1.0)
    a.add_argument("--q-steps", type=int, default=8)
    a.add_argument("--s0-steps", type=int, default=8)
    a.add_argument("--p-samples", type=int, default=3)
    a.add_argument("--csv", help="write the scan CSV here instead of stdout")
    a.add_argument("--json", help="write the full report as JSON")
    a.set_defaults(func=cmd_admissible)

    f = sub.add_parser("fit-decay", help="fit the L2 decay slope of a series CSV")
    f.add_argument("csv")
    f.add_argument("--s0", type=float, required=True)
    f.add_argument("--alpha", type=float, required=True)
    f.add_argument("--window", type=_range, required=True, metavar="TA:TB")
    f.add_argument("--L", type=float, help="box length (default: from config.ini beside the CSV)")
    f.add_argument("--beta", type=float, default=1.0)
    f.add_argument("--gate", type=float, default=4.0)
    f.add_argument("--column", default="l2_theta")
    f.add_argument("--json")
    f.set_defaults(func=cmd_fit_decay)

    v = sub.add_parser("verify-lp", help="Littlewood-Paley property suites")
    v.add_argument("--samples", type=int, default=100)
    v.add_argument("--grid", type=int, default=128)
    v.add_argument("--seed", type=int, default=0)
    v.add_argument("--L", type=float, default=32 * math.pi)
    v.add_argument("--alpha", type=float, default=0.8)
    v.add_argument("--json")
    v.add_argument("--fault", type=float, default=0.0, help=argparse.SUPPRESS)
    v.set_defaults(func=cmd_verify_lp)

    st = sub.add_parser("stability", help="two-solution stability experiment")
    st.add_argument("config")
    st.add_argument("--delta", type=float, default=1e-6)
    st.add_argument("--T", type=float)
    st.add_argument("--dt", type=float)
    st.add_argument("--scaling", action="store_true", help="also run delta/2 and compare")
    st.add_argument("--out")
    st.add_argument("--set", action="append", metavar="KEY=VALUE")
    st.set_defaults(func=cmd_stability)
    return p


def main(argv=None):
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (ConfigInvalid, CFLViolation, PreconditionViolated) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except runner.IOFailure as exc:
        print(f"I/O failure: {exc}", file=sys.stderr)
        return EXIT_IO


if __name__ == "__main__":
    sys.exit(main())
