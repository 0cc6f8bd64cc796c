"""Command line front end: run scenarios, compare logs, check clearances.

Exit codes: 0 success, 2 configuration error, 3 simulation divergence.
"""

from __future__ import annotations

import argparse
import json
import math
import sys
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path

from .config import ConfigError, load_config, resolve_config
from .engine import SimulationDiverged, gap_clearance, run_scenario
from .metrics import ComparisonError, compare_runs, write_comparison_csv
from .morphology import GeometryError, MorphGeometry


def _observer_flag(value: str | None) -> bool | None:
    if value is None:
        return None
    return value == "on"


def _cmd_run(args) -> int:
    config = resolve_config(args.config)
    result = run_scenario(config, args.out,
                          observer=_observer_flag(args.observer),
                          seed=args.seed)
    print(f"log written to {result.log_path}")
    print(json.dumps(result.metrics.as_dict(), indent=2))
    if config.gap is not None:
        geom = config.geometry
        stretched = gap_clearance(0.0, geom, config.gap.width,
                                  config.gap.margin)
        folded = gap_clearance(geom.alpha_max, geom, config.gap.width,
                               config.gap.margin)
        print(f"gap {config.gap.width:.3f} m: stretched width "
              f"{stretched.total_width:.3f} m pass={stretched.passes}, "
              f"folded width {folded.total_width:.3f} m pass={folded.passes}")
    if args.figures:
        from .report import render_run_figures
        for p in render_run_figures(result.log_path, args.out):
            print(f"figure written to {p}")
    return 0


def _cmd_compare(args) -> int:
    comparison = compare_runs(args.log_a, args.log_b)
    print(comparison.table())
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    csv_path = out / "comparison.csv"
    write_comparison_csv(comparison, csv_path)
    print(f"comparison written to {csv_path}")
    if args.figures:
        from .report import render_comparison_figure
        p = render_comparison_figure(
            args.log_a, args.log_b, out / "comparison.png",
            labels=(Path(args.log_a).stem, Path(args.log_b).stem))
        print(f"figure written to {p}")
    return 0


def _run_one(job):
    path, out, observer, seed, figures = job
    config = load_config(path)
    result = run_scenario(config, out, observer=observer, seed=seed)
    if figures:
        from .report import render_run_figures
        render_run_figures(result.log_path, out)
    return config.name, result.log_path, result.metrics.as_dict()


def _cmd_sweep(args) -> int:
    config_dir = Path(args.config_dir)
    paths = sorted(config_dir.glob("*.yaml"))
    if not paths:
        raise ConfigError(f"no scenario configs (*.yaml) in {config_dir}")
    jobs = [(p, args.out, _observer_flag(args.observer), args.seed,
             args.figures) for p in paths]
    if args.jobs > 1:
        with ProcessPoolExecutor(max_workers=args.jobs) as pool:
            results = list(pool.map(_run_one, jobs))
    else:
        results = [_run_one(job) for job in jobs]

    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    summary = out / "sweep_summary.csv"
    header = ["name", "log", "rms_error_x", "rms_error_y", "rms_error_z",
              "max_error", "saturation_ticks", "vdot_max"]
    lines = [",".join(header)]
    for name, log_path, m in results:
        lines.append(",".join([
            name, log_path,
            "%.12g" % m["rms_error_x"], "%.12g" % m["rms_error_y"],
            "%.12g" % m["rms_error_z"], "%.12g" % m["max_error"],
            str(m["saturation_ticks"]), "%.12g" % m["vdot_max"]]))
        print(f"{name}: max_error={m['max_error']:.4f} m, "
              f"sat_ticks={m['saturation_ticks']}")
    summary.write_text("\n".join(lines) + "\n", encoding="utf-8")
    print(f"summary written to {summary}")
    return 0


def _cmd_clearance(args) -> int:
    geom = MorphGeometry()
    result = gap_clearance(math.radians(args.alpha), geom, args.gap,
                           args.margin)
    verdict = "pass" if result.passes else "fail"
    print(f"fold {args.alpha:.1f} deg: total width "
          f"{result.total_width * 100:.1f} cm, clearance "
          f"{result.clearance * 100:.1f} cm, margin "
          f"{args.margin * 100:.1f} cm -> {verdict}")
    return 0


def _cmd_report(args) -> int:
    from .report import render_run_figures
    for p in render_run_figures(args.log, args.out):
        print(f"figure written to {p}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="morphquad",
        description="Folding-quadrotor simulation scenarios")
    sub = parser.add_subparsers(dest="command", required=True)

    p_run = sub.add_parser("run", help="run one scenario")
    p_run.add_argument("config", help="bundled scenario name or YAML path")
    p_run.add_argument("--seed", type=int, default=None)
    p_run.add_argument("--observer", choices=("on", "off"), default=None)
    p_run.add_argument("--out", default="runs")
    p_run.add_argument("--figures", action="store_true",
                       help="also render figures next to the CSV")
    p_run.set_defaults(func=_cmd_run)

    p_cmp = sub.add_parser("compare", help="compare two run logs")
    p_cmp.add_argument("log_a")
    p_cmp.add_argument("log_b")
    p_cmp.add_argument("--out", default="runs")
    p_cmp.add_argument("--figures", action="store_true")
    p_cmp.set_defaults(func=_cmd_compare)

    p_sweep = sub.add_parser("sweep", help="run every scenario in a directory")
    p_sweep.add_argument("config_dir")
    p_sweep.add_argument("--seed", type=int, default=None)
    p_sweep.add_argument("--observer", choices=("on", "off"), default=None)
    p_sweep.add_argument("--out", default="runs")
    p_sweep.add_argument("--jobs", type=int, default=1)
    p_sweep.add_argument("--figures", action="store_true")
    p_sweep.set_defaults(func=_cmd_sweep)

    p_clr = sub.add_parser("clearance",
                           help="geometric gap check at a fold angle")
    p_clr.add_argument("--alpha", type=float, required=True,
                       help="fold angle [deg]")
    p_clr.add_argument("--gap", type=float, required=True,
                       help="gap width [m]")
    p_clr.add_argument("--margin", type=float, default=0.03,
                       help="required margin [m]")
    p_clr.set_defaults(func=_cmd_clearance)

    p_rep = sub.add_parser("report", help="render figures from a run log")
    p_rep.add_argument("log")
    p_rep.add_argument("--out", default=None)
    p_rep.set_defaults(func=_cmd_report)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (ConfigError, GeometryError, ComparisonError,
            FileNotFoundError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except SimulationDiverged as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
