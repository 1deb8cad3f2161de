"""Command line entry point.

Exit codes: 0 success, 1 configuration error, 2 invariant failure,
3 runtime failure.
"""
from __future__ import annotations

import argparse
import sys
from pathlib import Path

from .config import ConfigError, config_help, ensure_writable, load_config
from . import experiments, report
from .verify import all_passed, run_verify_suite

EXIT_OK, EXIT_CONFIG, EXIT_INVARIANT, EXIT_RUNTIME = 0, 1, 2, 3
COMMANDS = ("simulate", "decay", "goodbox", "verify", "partition")


def emit_report(command: str, cfg, result, out_dir) -> list[Path]:
    """Write the CSV, JSON and (optionally) SVG outputs of ``command``."""
    out = Path(out_dir)
    files = []
    if command == "simulate":
        files.append(report.write_csv(out / "influence.csv", report.INFLUENCE_COLUMNS,
                                      report.influence_rows(result)))
        recs = [{"T": r.T, "eps": r.eps, "N": r.N, "replica": r.replica, "m_hat": r.m_hat,
                 "stderr": r.stderr, "fkg_ok": r.fkg_ok} for r in result]
        files.append(report.write_json(out / "influence.json", command, cfg, recs))
        if cfg.svg:
            files.append(report.write_svg(out / "influence.svg", report.influence_svg(result)))
    elif command == "decay":
        files.append(report.write_csv(out / "decay.csv", report.DECAY_COLUMNS,
                                      report.decay_rows(result)))
        summary = {"slope": result.slope, "slope_ci95": result.slope_ci,
                   "fit_bins": result.fit_bins, "flagged_no_slope": result.flagged,
                   "samples": result.samples, "p_L0": result.p_zero,
                   "containment_checked": result.containment_checked,
                   "containment_failures": result.containment_failures}
        files.append(report.write_json(out / "decay.json", command, cfg,
                                       report.decay_rows(result), summary=summary))
        if cfg.svg:
            files.append(report.write_svg(out / "decay.svg", report.decay_svg(result)))
    elif command == "goodbox":
        est = result["estimates"]
        files.append(report.write_csv(out / "goodbox.csv", report.GOODBOX_COLUMNS,
                                      report.goodbox_rows(est)))
        summary = {"c_g": result["c_g"], "c_g_per_q": result["c_g_per_q"]}
        files.append(report.write_json(out / "goodbox.json", command, cfg,
                                       report.goodbox_rows(est), summary=summary))
        sugg = out / "suggested.conf"
        sugg.write_text(f"c_g = {result['c_g']!r}\n")
        files.append(sugg)
    elif command == "verify":
        files.append(report.write_csv(out / "verify.csv", ["id", "tolerance", "residual", "passed"],
                                      [(c["id"], c["tolerance"], c["residual"], int(c["passed"]))
                                       for c in result]))
        files.append(report.write_json(out / "verify.json", command, cfg, [], residuals=result,
                                       summary={"all_passed": all_passed(result)}))
    elif command == "partition":
        pts, rep = result
        from ..metricpartition import write_partition_csv
        path = out / "partition.csv"
        write_partition_csv(rep, path)
        files.append(path)
        summary = {"points": len(pts), "R": rep.R, "r": rep.r, "blocks": rep.partition.n_blocks,
                   "boundary_fraction": rep.boundary_fraction, "ln_R_over_R": rep.reference,
                   "c1": rep.c1, "degenerate_padded": int(rep.degenerate.sum())}
        files.append(report.write_json(out / "partition.json", command, cfg, [], summary=summary))
    else:
        raise ValueError(f"unknown command {command!r}")
    return files


def execute(command: str, cfg):
    if command == "simulate":
        return experiments.run_influence_sweep(cfg)
    if command == "decay":
        return experiments.run_decay_experiment(cfg)
    if command == "goodbox":
        return experiments.run_goodbox_calibration(cfg)
    if command == "verify":
        return run_verify_suite()
    if command == "partition":
        return experiments.run_partition(cfg)
    raise ValueError(command)


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(
        prog="rfimlab", formatter_class=argparse.RawDescriptionHelpFormatter,
        description="Random-field Ising experiments and exact checks.",
        epilog="configuration keys (flat 'key = value' file, or --set key=value):\n"
               + config_help())
    sub = p.add_subparsers(dest="command", required=True)
    helps = {"simulate": "boundary influence sweep (influence.csv)",
             "decay": "law of the outmost blue boundary size (decay.csv)",
             "goodbox": "good-box probability and c_g calibration (goodbox.csv)",
             "verify": "exact-oracle invariant suite (verify.csv)",
             "partition": "padded partition of a boundary set (partition.csv)"}
    for name in COMMANDS:
        s = sub.add_parser(name, help=helps[name])
        s.add_argument("--config", type=Path, help="configuration file")
        s.add_argument("--set", dest="overrides", action="append", default=[],
                       metavar="KEY=VALUE", help="override one configuration key")
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        cfg = load_config(args.config, args.overrides, args.command)
        ensure_writable(cfg.out_dir)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except OSError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    try:
        result = execute(args.command, cfg)
        files = emit_report(args.command, cfg, result, cfg.out_dir)
    except Exception as exc:  # noqa: BLE001 - any failure maps to one exit code
        print(f"runtime failure: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_RUNTIME
    for f in files:
        print(f)
    if args.command == "verify" and not all_passed(result):
        print("invariant failure", file=sys.stderr)
        return EXIT_INVARIANT
    if args.command == "decay" and result.containment_failures:
        print("invariant failure: origin cluster escaped its box region", file=sys.stderr)
        return EXIT_INVARIANT
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
