"""Command-line entry point.

    sqgobstacle <subcommand> --config <path> [--out <dir>] [--snapshot-every <n>] [--resume <checkpoint>]

Exit codes: 0 success, 1 failure (a check did not pass or the run aborted),
2 invalid configuration or arguments, 3 blow-up suspected. The last line on stdout is
``SUMMARY {json}``.
"""

import argparse
import glob
import json
import os
import sys
import time

import numpy as np

from .errors import CFLError, ConfigError, PicardConvergenceError

EXIT_OK, EXIT_FAIL, EXIT_CONFIG, EXIT_BLOWUP = 0, 1, 2, 3
SUBCOMMANDS = ("simulate", "greens-validate", "delta-study", "stability-study", "diagnose")


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        print(f"{self.prog}: error: {message}", file=sys.stderr)
        _summary({"status": "error", "error": message})
        sys.exit(EXIT_CONFIG)


def _summary(d):
    print("SUMMARY " + json.dumps(d, sort_keys=True), flush=True)


def _snapshot_name(step, fmt):
    return f"snapshot_{step:07d}.{'bin' if fmt == 'binary' else 'csv'}"


def cmd_simulate(rc, args):
    from .io import load_checkpoint, save_checkpoint, save_snapshot, write_diagnostics_csv
    from .scheme import BLOWUP, run_simulation

    cfg = rc.sim
    out = rc.out_dir
    every = rc.snapshot_every
    os.makedirs(out, exist_ok=True)
    state = load_checkpoint(args.resume, cfg) if args.resume else None

    def on_step(st):
        if every and st.step % every == 0:
            save_snapshot(st.omega, os.path.join(out, _snapshot_name(st.step, rc.snapshot_format)), rc.snapshot_format)
            save_checkpoint(st, cfg, os.path.join(out, "checkpoint.json"))

    def on_record(st):
        if st.step == 0:
            save_snapshot(st.omega, os.path.join(out, _snapshot_name(0, rc.snapshot_format)), rc.snapshot_format)

    res = run_simulation(cfg, state=state, keep_trajectory=False, on_record=on_record, on_step=on_step)
    st = res.state
    final = os.path.join(out, _snapshot_name(st.step, rc.snapshot_format))
    if not os.path.exists(final):
        save_snapshot(st.omega, final, rc.snapshot_format)
    save_checkpoint(st, cfg, os.path.join(out, "checkpoint.json"))
    csv = os.path.join(out, "diagnostics.csv")
    write_diagnostics_csv(res.diagnostics, csv)
    last = res.diagnostics.rows[-1]
    summary = {
        "command": "simulate", "status": "ok", "verdict": res.verdict, "steps": st.step, "t": st.t,
        "R": last["R"], "osgood_bound": last["osgood_bound"], "blowup_integral": res.diagnostics.blowup_integral,
        "diagnostics_csv": csv, "state_hash": st.state_hash(),
    }
    return (EXIT_BLOWUP if res.verdict == BLOWUP else EXIT_OK), summary


def cmd_greens_validate(rc, args):
    from .green import boundary_vanishing, brute_force_green_oracle, compare_with_oracle

    geom = rc.sim.geom
    t0 = time.perf_counter()
    res = brute_force_green_oracle(64, geom=geom)
    worst, median, npts = compare_with_oracle(res, geom, min_cells=4.0)
    bv = boundary_vanishing(geom)
    elapsed = time.perf_counter() - t0
    os.makedirs(rc.out_dir, exist_ok=True)
    path = os.path.join(rc.out_dir, "greens_validate.csv")
    with open(path, "w", encoding="ascii", newline="\n") as fh:
        fh.write("metric,value\n")
        for k, v in (("max_rel_error", worst), ("median_rel_error", median), ("points", npts),
                     ("boundary_ratio", bv)):
            fh.write(f"{k},{v:.17g}\n")
    ok = worst <= 0.05 and bv <= 1e-10
    summary = {"command": "greens-validate", "status": "ok" if ok else "fail", "max_rel_error": worst,
               "median_rel_error": median, "points": npts, "boundary_ratio": bv, "seconds": round(elapsed, 3)}
    return (EXIT_OK if ok else EXIT_FAIL), summary


def cmd_delta_study(rc, args):
    from .scheme import delta_continuation_study

    if len(rc.deltas) < 2:
        raise ConfigError("delta-study needs at least two values in [kernel] deltas", key="deltas")
    study = delta_continuation_study(rc.sim, rc.deltas)
    os.makedirs(rc.out_dir, exist_ok=True)
    path = os.path.join(rc.out_dir, "delta_study.csv")
    with open(path, "w", encoding="ascii", newline="\n") as fh:
        fh.write("delta_a,delta_b,l2,h1\n")
        for a, b, l2, h1 in zip(study.deltas, study.deltas[1:], study.l2, study.h1):
            fh.write(f"{a:.17g},{b:.17g},{l2:.17g},{h1:.17g}\n")
    summary = {"command": "delta-study", "status": "ok", "verdict": study.verdict, "deltas": study.deltas,
               "l2": study.l2, "h1": study.h1, "csv": path}
    return EXIT_OK, summary


def cmd_stability_study(rc, args):
    from .scheme import stability_study

    study = stability_study(rc.sim, rc.perturbation_eps)
    os.makedirs(rc.out_dir, exist_ok=True)
    path = os.path.join(rc.out_dir, "stability.csv")
    with open(path, "w", encoding="ascii", newline="\n") as fh:
        fh.write(",".join(["t"] + [f"d_eps_{e:g}" for e in study.eps]) + "\n")
        for i, t in enumerate(study.times):
            fh.write(",".join(f"{x:.17g}" for x in [t] + [d[i] for d in study.distances]) + "\n")
    ok = study.envelope_ok and (np.isnan(study.ratio_min) or (0.4 <= study.ratio_min and study.ratio_max <= 0.6))
    summary = {"command": "stability-study", "status": "ok" if ok else "fail", "growth": study.growth,
               "envelope_ok": study.envelope_ok, "ratio_min": study.ratio_min, "ratio_max": study.ratio_max,
               "csv": path}
    return (EXIT_OK if ok else EXIT_FAIL), summary


def cmd_diagnose(rc, args):
    from .io import load_snapshot, write_diagnostics_csv
    from .scheme import recompute_diagnostics

    files = sorted(glob.glob(os.path.join(rc.out_dir, "snapshot_*")))
    if not files:
        raise ConfigError(f"no snapshot files in {rc.out_dir}", key="dir")
    snaps = []
    for f in files:
        field = load_snapshot(f)
        if field.grid != rc.sim.grid:
            raise ConfigError(f"{f} does not match the configured grid", key="dir")
        snaps.append((field.time_tag, field))
    series = recompute_diagnostics(rc.sim, snaps)
    path = os.path.join(rc.out_dir, "diagnostics_recomputed.csv")
    write_diagnostics_csv(series, path)
    last = series.rows[-1]
    summary = {"command": "diagnose", "status": "ok", "snapshots": len(files), "t": last["t"], "R": last["R"],
               "verdict": series.verdict, "csv": path}
    return EXIT_OK, summary


COMMANDS = {
    "simulate": cmd_simulate,
    "greens-validate": cmd_greens_validate,
    "delta-study": cmd_delta_study,
    "stability-study": cmd_stability_study,
    "diagnose": cmd_diagnose,
}


def build_parser():
    p = _Parser(prog="sqgobstacle", description="Regularized SQG flow around a moving disk.")
    p.add_argument("subcommand", choices=SUBCOMMANDS)
    p.add_argument("--config", required=True, help="INI configuration file")
    p.add_argument("--out", help="output directory (overrides [output] dir)")
    p.add_argument("--snapshot-every", type=int, help="write a snapshot and checkpoint every n steps")
    p.add_argument("--resume", help="checkpoint to continue from (simulate)")
    return p


def main(argv=None):
    from .config import parse_config

    args = build_parser().parse_args(argv)
    try:
        rc = parse_config(args.config)
        if args.out:
            rc.out_dir = args.out
        if args.snapshot_every is not None:
            if args.snapshot_every < 0:
                raise ConfigError("must be >= 0", key="--snapshot-every")
            rc.snapshot_every = args.snapshot_every
        if args.resume and args.subcommand != "simulate":
            raise ConfigError("--resume only applies to simulate", key="--resume")
        code, summary = COMMANDS[args.subcommand](rc, args)
    except (ConfigError, CFLError, OSError) as e:
        print(f"error: {e}", file=sys.stderr)
        _summary({"command": args.subcommand, "status": "error", "error": str(e)})
        return EXIT_CONFIG
    except PicardConvergenceError as e:
        print(f"error: {e}", file=sys.stderr)
        _summary({"command": args.subcommand, "status": "error", "error": str(e)})
        return EXIT_FAIL
    _summary(summary)
    return code


if __name__ == "__main__":
    sys.exit(main())
