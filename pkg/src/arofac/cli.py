"""Command-line surface: decompose, synth, sweep, compare.

Exit codes: 0 success, 2 input/output failure (unreadable or malformed
files, invalid arguments), 3 numerical failure inside a pipeline stage.
"""

import argparse
import dataclasses
import os
import sys
import time

from .als import AlsConfig, parafac_als
from .exceptions import InputError, NumericalError
from .formats import (atomic_write_json, atomic_write_text, load_eem_csv,
                      read_t3, read_truth_json, write_factor_csvs,
                      write_sweep_csv, write_t3, write_truth_json)
from .pipeline import Arofac2Config, arofac2
from .rankone import FindRankOneConfig
from .synth import SynthSpec, gen_synthetic, match_components, noise_sweep

EXIT_OK = 0
EXIT_IO = 2
EXIT_NUMERICAL = 3


def _pipeline_config(args):
    return Arofac2Config(
        restarts_per_mode=args.restarts,
        findrankone=FindRankOneConfig(),
        span_target_dim=args.rank_hint,
        compute_mode3=not args.no_mode3,
        span_weighting=args.span_weighting,
    )


def _load_input(path):
    if path.endswith(".t3"):
        return read_t3(path)
    return load_eem_csv(path)


def _factor_payload(factors):
    return [
        {"weight": f.weight, "u": f.u.tolist(), "v": f.v.tolist(),
         "w": f.w.tolist()}
        for f in factors
    ]


def _report(argv_echo, cfg, d, wall):
    return {
        "command": argv_echo,
        "config": dataclasses.asdict(cfg),
        "rank": d.rank,
        "factors": _factor_payload(d.factors),
        "rel_error": d.rel_error,
        "diagnostics": d.diagnostics or {},
        "wall_time_s": wall,
    }


def cmd_decompose(args):
    A = _load_input(args.input)
    cfg = _pipeline_config(args)
    t0 = time.perf_counter()
    d = arofac2(A, cfg, seed=args.seed)
    report = _report(args.argv_echo, cfg, d, time.perf_counter() - t0)
    os.makedirs(args.output_dir, exist_ok=True)
    report_path = os.path.join(args.output_dir, "report.json")
    atomic_write_json(report_path, report)
    write_factor_csvs(d.factors, args.output_dir)
    print(f"rank {d.rank}  rel_error {d.rel_error:.6g}  report {report_path}")
    return EXIT_OK


def cmd_synth(args):
    spec = SynthSpec(args.dims[0], args.dims[1], args.dims[2], args.rank,
                     eps=args.noise, seed=args.seed)
    A, truth = gen_synthetic(spec)
    os.makedirs(args.output_dir, exist_ok=True)
    stem = (f"synth_{spec.n1}x{spec.n2}x{spec.n3}_r{spec.r}"
            f"_eps{spec.eps!r}_seed{spec.seed}")
    t3_path = os.path.join(args.output_dir, stem + ".t3")
    truth_path = os.path.join(args.output_dir, stem + ".truth.json")
    write_t3(A, t3_path)
    write_truth_json(truth, spec, truth_path)
    print(t3_path)
    print(truth_path)
    return EXIT_OK


def cmd_sweep(args):
    base = SynthSpec(args.dims[0], args.dims[1], args.dims[2], args.rank,
                     eps=0.0, seed=args.seed)
    try:
        grid = [float(x) for x in args.eps_grid.split(",") if x.strip()]
    except ValueError:
        raise InputError(f"cannot parse --eps-grid {args.eps_grid!r}")
    cfg = _pipeline_config(args)
    rows = noise_sweep(base, grid, args.n_seeds, cfg)
    for row in rows:
        if row["detected_rank"] is None:
            print(f"warning: cell eps={row['eps']} seed={row['seed']} failed",
                  file=sys.stderr)
    os.makedirs(args.output_dir, exist_ok=True)
    csv_path = os.path.join(args.output_dir, "sweep.csv")
    write_sweep_csv(rows, csv_path)
    print(csv_path)
    return EXIT_OK


def _corr_csv_text(C):
    return "\n".join(",".join(repr(float(x)) for x in row) for row in C) + "\n"


def cmd_compare(args):
    A = _load_input(args.input)
    truth = None
    if args.input.endswith(".t3"):
        sidecar = args.input[:-3] + ".truth.json"
        if os.path.exists(sidecar):
            truth = read_truth_json(sidecar)
    if truth is None:
        print("warning: no ground-truth sidecar found; fit-only comparison",
              file=sys.stderr)
    cfg = _pipeline_config(args)
    t0 = time.perf_counter()
    d_auto = arofac2(A, cfg, seed=args.seed)
    wall_auto = time.perf_counter() - t0
    als_cfg = AlsConfig(rank=args.rank, init_seed=args.seed)
    t0 = time.perf_counter()
    d_als = parafac_als(A, als_cfg)
    wall_als = time.perf_counter() - t0
    pair = {
        "arofac2": _report(args.argv_echo, cfg, d_auto, wall_auto),
        "parafac": {
            "command": args.argv_echo,
            "config": dataclasses.asdict(als_cfg),
            "rank": d_als.rank,
            "factors": _factor_payload(d_als.factors),
            "rel_error": d_als.rel_error,
            "diagnostics": d_als.diagnostics or {},
            "wall_time_s": wall_als,
        },
    }
    os.makedirs(args.output_dir, exist_ok=True)
    if truth is not None:
        for name, d in (("arofac2", d_auto), ("parafac", d_als)):
            C, matching, mc = match_components(d, truth)
            atomic_write_text(
                os.path.join(args.output_dir, f"corr_{name}.csv"),
                _corr_csv_text(C),
            )
            pair[name]["min_matched_corr"] = mc
            pair[name]["matching"] = [list(m) for m in matching]
    report_path = os.path.join(args.output_dir, "compare.json")
    atomic_write_json(report_path, pair)
    print(
        f"arofac2: rank {d_auto.rank} rel_error {d_auto.rel_error:.6g} | "
        f"parafac(rank={args.rank}): rel_error {d_als.rel_error:.6g} | "
        f"report {report_path}"
    )
    return EXIT_OK


def _add_common(p, input_flag=True):
    if input_flag:
        p.add_argument("--input", required=True,
                       help=".t3 file or EEM CSV glob pattern")
    p.add_argument("--output-dir", default=".", help="where outputs land")
    p.add_argument("--seed", type=int, default=0)


def build_parser():
    p = argparse.ArgumentParser(
        prog="arofac",
        description="Automatic CP-rank detection and decomposition of "
                    "degree-3 tensors, plus a fixed-rank ALS baseline.",
    )
    sub = p.add_subparsers(dest="command", required=True)

    d = sub.add_parser("decompose", help="detect rank and decompose a tensor")
    _add_common(d)
    d.add_argument("--restarts", type=int, default=200,
                   help="random restarts per mode pair")
    d.add_argument("--rank-hint", type=int, default=None,
                   help="pin the span dimension when the rank is known")
    d.add_argument("--span-weighting", choices=("spectrum", "uniform"),
                   default="spectrum",
                   help="restart sampling bias inside the slice span")
    d.add_argument("--no-mode3", action="store_true",
                   help="skip the mode-3 analysis; emit per-slice weights")
    d.set_defaults(func=cmd_decompose)

    s = sub.add_parser("synth", help="generate a synthetic instance")
    _add_common(s, input_flag=False)
    s.add_argument("--dims", type=int, nargs=3, required=True,
                   metavar=("N1", "N2", "N3"))
    s.add_argument("--rank", type=int, required=True)
    s.add_argument("--noise", type=float, default=0.0,
                   help="entrywise noise scale (standard deviation)")
    s.set_defaults(func=cmd_synth)

    w = sub.add_parser("sweep", help="rank detection across noise levels")
    _add_common(w, input_flag=False)
    w.add_argument("--dims", type=int, nargs=3, required=True,
                   metavar=("N1", "N2", "N3"))
    w.add_argument("--rank", type=int, required=True)
    w.add_argument("--eps-grid",
                   default="0.01,0.05,0.1,0.2,0.3,0.35,0.45,0.6",
                   help="comma-separated noise levels")
    w.add_argument("--n-seeds", type=int, default=5)
    w.add_argument("--restarts", type=int, default=200)
    w.add_argument("--rank-hint", type=int, default=None)
    w.add_argument("--span-weighting", choices=("spectrum", "uniform"),
                   default="spectrum")
    w.add_argument("--no-mode3", action="store_true")
    w.set_defaults(func=cmd_sweep)

    c = sub.add_parser("compare", help="rank-detecting pipeline vs fixed-rank ALS")
    _add_common(c)
    c.add_argument("--rank", type=int, required=True,
                   help="rank for the ALS arm")
    c.add_argument("--restarts", type=int, default=200)
    c.add_argument("--rank-hint", type=int, default=None)
    c.add_argument("--span-weighting", choices=("spectrum", "uniform"),
                   default="spectrum")
    c.add_argument("--no-mode3", action="store_true")
    c.set_defaults(func=cmd_compare)

    return p


def main(argv=None):
    argv = list(sys.argv[1:] if argv is None else argv)
    parser = build_parser()
    args = parser.parse_args(argv)
    args.argv_echo = ["arofac"] + argv
    try:
        return args.func(args)
    except InputError as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_IO
    except OSError as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_IO
    except NumericalError as e:
        print(f"numerical error: {e}", file=sys.stderr)
        return EXIT_NUMERICAL


if __name__ == "__main__":
    sys.exit(main())
