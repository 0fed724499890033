"""Command-line driver: ``delaynull {spectrum,reconstruct,synthesize,verify,compare}``.

Exit codes: 0 success, 2 configuration error, 3 numerical failure.
"""

from __future__ import annotations

import argparse
import csv
import io
import sys
from dataclasses import replace
from pathlib import Path

import numpy as np

from ._grid import fmt
from .config import ConfigError, format_complex, load_config, parse_int_list, parse_range
from .control import (CONVENTION, NULL_TOL, Horizon, solve_p_lambda, synthesize_control,
                      u_for_eigenvector)
from .exceptions import NumericalError
from .oracle import least_norm_control, norm_gap_report, oracle_grid, report_csv
from .simulate import simulate, terminal_segment_norm
from .spectral import SpectrumSet, eval_charfn, find_roots
from .summation import WEIGHT_HEADER, reconstruction_error, required_branch, weight_table, \
    weighted_terms

EXIT_OK, EXIT_CONFIG, EXIT_NUMERIC = 0, 2, 3


def _write(path, rows, header):
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    w.writerows(rows)
    Path(path).write_text(buf.getvalue())


def _spectrum_for(cfg, orders):
    """Spectrum covering the configured branches and every radius ``R_n`` needed."""
    kernel = cfg.kernel()
    k = max((required_branch(float(cfg.schedule.radius(n))) for n in orders), default=0)
    lo, hi = -k, k
    if cfg.branches is not None:
        lo, hi = min(lo, cfg.branches[0]), max(hi, cfg.branches[1])
    return find_roots(kernel, range(lo, hi + 1))


def cmd_spectrum(cfg, out):
    kernel = cfg.kernel()
    if cfg.branches is None:
        spec = SpectrumSet((), kernel, branch_range=None)
    else:
        spec = find_roots(kernel, range(cfg.branches[0], cfg.branches[1] + 1))
    spec.to_csv(out / "spectrum.csv")
    rows = [[r.branch, fmt(r.lam.real), fmt(r.lam.imag), fmt(abs(eval_charfn(r.lam, kernel)))]
            for r in spec]
    _write(out / "residuals.csv", rows, ["branch", "re_lambda", "im_lambda", "abs_d"])
    return [out / "spectrum.csv", out / "residuals.csv"]


def cmd_reconstruct(cfg, out):
    spec = _spectrum_for(cfg, cfg.n_list)
    x = cfg.initial_state()
    rows, wtext = [], []
    for i, n in enumerate(cfg.n_list):
        rows.append([n, fmt(reconstruction_error(x, n, spec, cfg.schedule))])
        wtext.append(weight_table(n, spec, cfg.schedule).to_csv(header=(i == 0)))
    _write(out / "reconstruct.csv", rows, ["n", "m_norm_error"])
    (out / "weights.csv").write_text("".join(wtext) or ",".join(WEIGHT_HEADER) + "\n")
    return [out / "reconstruct.csv", out / "weights.csv"]


def _control(cfg):
    """Control for the configured initial state and the metadata describing it."""
    horizon = Horizon(cfg.T)
    grid = cfg.steps_per_unit
    meta = {"convention": CONVENTION, "exceptional_weight": "1",
            "null_tol": fmt(NULL_TOL), "method": cfg.method}
    if cfg.method == "eigen":
        rec = cfg.eigen_record()
        u = u_for_eigenvector(rec, horizon, grid)
        meta[f"kappa_{rec.branch}"] = format_complex(solve_p_lambda(rec, horizon).kappa)
        return u, meta
    spec = _spectrum_for(cfg, [cfg.n])
    x = cfg.initial_state()
    u = synthesize_control(x, cfg.n, spec, cfg.schedule, horizon, grid)
    recs, _ = weighted_terms(x, cfg.n, spec, cfg.schedule)
    meta["terms"] = str(len(recs))
    for r in recs:
        meta[f"kappa_{r.branch}"] = format_complex(solve_p_lambda(r, horizon).kappa)
    return u, meta


def cmd_synthesize(cfg, out):
    u, meta = _control(cfg)
    u.to_csv(out / "control.csv")
    (out / "control.meta.ini").write_text(cfg.to_text(meta))
    return [out / "control.csv", out / "control.meta.ini"]


def cmd_verify(cfg, out):
    u, _ = _control(cfg)
    steps = cfg.steps_per_unit
    x0 = cfg.initial_state(panels=steps)
    kernel = cfg.kernel()
    free = terminal_segment_norm(simulate(x0, None, kernel, cfg.T, steps), cfg.T)
    traj = simulate(x0, u, kernel, cfg.T, steps)
    ctrl = terminal_segment_norm(traj, cfg.T)
    ratio = 0.0 if free == 0 and ctrl == 0 else (ctrl / free if free else float("inf"))
    _write(out / "verify.csv", [[fmt(cfg.T), fmt(ctrl), fmt(free), fmt(ratio)]],
           ["T", "terminal_norm_controlled", "terminal_norm_free", "ratio"])
    traj.to_csv(out / "trajectory.csv")
    return [out / "verify.csv", out / "trajectory.csv"]


def cmd_compare(cfg, out):
    spec = _spectrum_for(cfg, cfg.n_list)
    kernel = cfg.kernel()
    x0 = cfg.initial_state()
    x_fine = cfg.initial_state(panels=oracle_grid(cfg.T, cfg.oracle_points))
    oracle = least_norm_control(x_fine, kernel, cfg.T, cfg.oracle_points)
    rows = norm_gap_report(x0, kernel, cfg.T, cfg.oracle_points, cfg.n_list, spec,
                           cfg.schedule, oracle=oracle)
    report_csv(rows, out / "compare.csv")
    return [out / "compare.csv"]


COMMANDS = {
    "spectrum": cmd_spectrum,
    "reconstruct": cmd_reconstruct,
    "synthesize": cmd_synthesize,
    "verify": cmd_verify,
    "compare": cmd_compare,
}


def build_parser():
    p = argparse.ArgumentParser(prog="delaynull", description=__doc__.splitlines()[0])
    sub = p.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        s = sub.add_parser(name)
        s.add_argument("--config", required=True, metavar="PATH")
        s.add_argument("--out", metavar="DIR", help="output directory (overrides [output] dir)")
        s.add_argument("--n-list", help="summation orders, e.g. 2,4,6")
        s.add_argument("--grid", type=int, help="steps per unit time for controls and simulation")
        s.add_argument("--branches", help="branch range lo..hi")
    return p


def main(argv=None):
    args = build_parser().parse_args(argv)
    try:
        cfg = load_config(args.config)
        over = {}
        if args.n_list is not None:
            over["n_list"] = parse_int_list(args.n_list, "--n-list")
        if args.grid is not None:
            if args.grid < 2:
                raise ConfigError("--grid must be >= 2")
            over["steps_per_unit"] = args.grid
        if args.branches is not None:
            over["branches"] = parse_range(args.branches, "--branches")
        if args.out is not None:
            over["out_dir"] = args.out
        cfg = replace(cfg, **over)
        out = Path(cfg.out_dir)
        out.mkdir(parents=True, exist_ok=True)
        files = COMMANDS[args.command](cfg, out)
    except (ConfigError, FileNotFoundError) as exc:
        print(f"delaynull: configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (NumericalError, OverflowError, np.linalg.LinAlgError) as exc:
        print(f"delaynull: numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except ValueError as exc:
        print(f"delaynull: invalid input: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    for f in files:
        print(f)
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
