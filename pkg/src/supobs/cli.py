"""Command-line harness.

Subcommands: simulate, table, sample, verify-lmi, synthesize-gains,
pe-check.  Exit codes: 0 success, 2 configuration error, 3
runtime/certification failure.
"""

import argparse
import os
import sys

import numpy as np

from .config import parse_config
from .errors import ConfigError, NotNSDError, SupobsError
from .gains import assemble_cc_lmi, load_certificate, save_certificate, verify_cc_gains
from .harness import (
    build_plant_family,
    run_table,
    simulate,
    _jansen_rit_gains,
)
from .linalg import sym_eig
from .pe import pe_report
from .sampling import ParamBox, grid_sample

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_RUNTIME = 3


def _vec_arg(text):
    return np.array([float(v) for v in text.replace(",", " ").split()], dtype=float)


def _out_path(args, default_name):
    if args.out:
        os.makedirs(args.out, exist_ok=True)
        return os.path.join(args.out, default_name)
    return default_name


def cmd_simulate(args):
    cfg = parse_config(args.config)
    trace, summary = simulate(cfg, seed_override=args.seed, out_dir=args.out)
    if not args.quiet:
        line = (
            f"final |p_err|_inf={summary['err_p_inf_final']:.6g} "
            f"|p_err|={summary.get('err_p_euclid_final', float('nan')):.6g} "
            f"final |x_err|_inf={summary['err_x_inf_final']:.6g} "
            f"zooms={summary['zoom_count']} wall={summary['wall_time_s']:.1f}s "
            f"trace={summary['paths']['trace']}"
        )
        print(line)
    return EXIT_OK


def cmd_table(args):
    cfg = parse_config(args.config)
    report = run_table(cfg, seed_override=args.seed, workers=args.workers)
    text = report.format()
    path = _out_path(args, "table.txt")
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(text + "\n")
    if not args.quiet:
        print(text)
        print("(ref column: reported parameter-error cells for the "
              "neural-mass example, shown for qualitative context)")
    return EXIT_OK


def cmd_sample(args):
    cfg = parse_config(args.config)
    box = ParamBox.from_bounds(cfg.theta_lower, cfg.theta_upper)
    pset = grid_sample(box, cfg.m)
    path = _out_path(args, "points.csv")
    n_p = pset.points.shape[1]
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(",".join(f"p_{j + 1}" for j in range(n_p)) + "\n")
        for row in pset.points:
            fh.write(",".join(repr(float(v)) for v in row) + "\n")
    if not args.quiet:
        print(f"{pset.n_points} grid points -> {path}")
    return EXIT_OK


def cmd_verify_lmi(args):
    data, doc = load_certificate(args.certificate)
    A = np.array(doc["plant_A"], dtype=float)
    G = np.array(doc["plant_G"], dtype=float)
    C = np.array(doc["plant_C"], dtype=float)
    H = np.array(doc["plant_H"], dtype=float)
    X = assemble_cc_lmi(data, A, G, C, H)
    max_eig = float(sym_eig(X).eigenvalues[-1])
    verify_cc_gains(data, A, G, C, H)  # raises NotNSDError / BadP / BadM on failure
    if not args.quiet:
        print(f"CERTIFIED, max eig = {max_eig:.6g}")
    return EXIT_OK


def cmd_synthesize_gains(args):
    cfg = parse_config(args.config)
    if cfg.plant_kind != "jansen_rit":
        raise ConfigError("synthesize-gains handles the circle-criterion plant "
                          "(plant.kind = jansen_rit)")
    plant = build_plant_family(cfg)
    box = ParamBox.from_bounds(cfg.theta_lower, cfg.theta_upper)
    data = _jansen_rit_gains(cfg, plant, box)
    path = _out_path(args, "gains.json")
    doc = save_certificate(
        path, data,
        A=plant.A_of_p(cfg.p_star), G=plant.G_of_p(cfg.p_star),
        C=plant.C_of_p(cfg.p_star), H=plant.H, p=cfg.p_star,
    )
    if not args.quiet:
        print(f"synthesized gains certified, max eig = {doc['max_eig']:.6g} -> {path}")
    return EXIT_OK


def cmd_pe_check(args):
    yerr = np.genfromtxt(args.trace, delimiter=",", names=True)
    names = yerr.dtype.names
    ts = yerr["t"]
    cols = [n for n in names if n.startswith("yerr_inf_")]
    if not cols:
        raise ConfigError(f"{args.trace} has no yerr_inf_* columns; pass the "
                          "companion output-error trace written by simulate")
    Y = np.column_stack([yerr[c] for c in cols])
    pts = np.genfromtxt(args.points, delimiter=",", names=True)
    p_cols = [n for n in pts.dtype.names if n.startswith("p_")]
    points = np.column_stack([np.atleast_1d(pts[c]) for c in p_cols])
    window = args.window
    if window is None:
        if args.config is None:
            raise ConfigError("pe-check needs --window or --config (for the "
                              "default window 5/lambda)")
        window = 5.0 / parse_config(args.config).monitor_lambda
    rep = pe_report(ts, Y, window, points, _vec_arg(args.p_star))
    path = _out_path(args, "pe_report.csv")
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("observer,p_err_inf,min_energy,gramian_floor\n")
        for i in range(points.shape[0]):
            fh.write(
                f"{i + 1},{repr(float(rep.p_err_inf[i]))},"
                f"{repr(float(rep.min_energy[i]))},{repr(float(rep.gramian_floor[i]))}\n"
            )
        fh.write(f"spearman,{repr(float(rep.spearman))},,\n")
    if not args.quiet:
        print(f"window={window:.6g}s spearman={rep.spearman:.4f} -> {path}")
    return EXIT_OK


def build_parser():
    ap = argparse.ArgumentParser(
        prog="supobs",
        description="Supervisory multi-observer parameter and state estimation",
    )
    sub = ap.add_subparsers(dest="command", required=True)

    def common(p, config_required=True):
        if config_required:
            p.add_argument("--config", required=True, help="experiment config path")
        p.add_argument("--out", default=None, help="output directory")
        p.add_argument("--seed", type=int, default=None, help="input seed override")
        p.add_argument("--quiet", action="store_true")

    p = sub.add_parser("simulate", help="run one supervisory estimation experiment")
    common(p)
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("table", help="static-vs-dynamic sweep over observer counts")
    common(p)
    p.add_argument("--workers", type=int, default=1, help="parallel sweep cells")
    p.set_defaults(func=cmd_table)

    p = sub.add_parser("sample", help="dump the parameter grid as CSV")
    common(p)
    p.set_defaults(func=cmd_sample)

    p = sub.add_parser("verify-lmi", help="re-verify a gain certificate file")
    p.add_argument("--certificate", required=True)
    p.add_argument("--out", default=None)
    p.add_argument("--quiet", action="store_true")
    p.set_defaults(func=cmd_verify_lmi)

    p = sub.add_parser("synthesize-gains", help="synthesize and save certified gains")
    common(p)
    p.set_defaults(func=cmd_synthesize_gains)

    p = sub.add_parser("pe-check", help="persistency-of-excitation diagnostics")
    p.add_argument("--trace", required=True, help="per-observer output-error CSV")
    p.add_argument("--points", required=True, help="grid points CSV (see sample)")
    p.add_argument("--p-star", required=True, help="true parameter, e.g. '6.5 25.5'")
    p.add_argument("--window", type=float, default=None)
    p.add_argument("--config", default=None)
    p.add_argument("--out", default=None)
    p.add_argument("--quiet", action="store_true")
    p.set_defaults(func=cmd_pe_check)
    return ap


def main(argv=None):
    ap = build_parser()
    args = ap.parse_args(argv)
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except NotNSDError as exc:
        print(f"certification failure: {exc}", file=sys.stderr)
        return EXIT_RUNTIME
    except SupobsError as exc:
        print(f"runtime failure: {exc}", file=sys.stderr)
        return EXIT_RUNTIME


if __name__ == "__main__":
    sys.exit(main())
