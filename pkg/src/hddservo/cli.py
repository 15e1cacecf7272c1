"""
Command-line entry point.

    hddservo run <config|preset>... [--out DIR] [--seed S] [--jobs N] [--format csv|csv+svg]
    hddservo presets
    hddservo show <preset>

Exit status: 0 success, 2 configuration error, 3 numerical blow-up.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path

from . import config as config_mod
from .errors import ConfigError, NonFiniteError
from .scenario import run_scenario
from .svgplot import emit_plot
from .traceio import emit_trace

log = logging.getLogger("hddservo")

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_NUMERIC = 3


def write_outputs(result, out_dir: Path, fmt: str = "csv+svg") -> list:
    out_dir.mkdir(parents=True, exist_ok=True)
    written = []
    for name, trace in result.traces.items():
        written.append(emit_trace(trace, out_dir / f"{name}.csv"))
        if fmt == "csv+svg" and len(trace):
            written.append(emit_plot(trace, out_dir / f"{name}_head_position.svg", "head_position",
                                     title=f"{result.config.name}: head position ({name})"))
            if name == "identification":
                written.append(emit_plot(trace, out_dir / "identification_theta_convergence.svg",
                                         "theta_convergence"))
                written.append(emit_plot(trace, out_dir / "identification_d_vs_dhat.svg", "d_vs_dhat"))
    summary_path = out_dir / "summary.json"
    summary_path.write_text(json.dumps(result.summary.as_dict(), indent=2) + "\n", encoding="utf-8")
    written.append(summary_path)
    (out_dir / "config.txt").write_text(config_mod.dumps(result.config), encoding="utf-8")
    return written


def format_summary(summary) -> str:
    lines = [f"[{summary.name}]"]
    for key, val in summary.as_dict().items():
        if key == "name" or val is None:
            continue
        if isinstance(val, float):
            val = f"{val:.6g}"
        lines.append(f"  {key}: {val}")
    return "\n".join(lines)


def run_one(target: str, out: str | None, seed: int | None, fmt: str):
    """Returns (exit code, message)."""
    try:
        cfg = config_mod.resolve(target)
        if seed is not None:
            cfg.seed = seed
        result = run_scenario(cfg)
    except ConfigError as exc:
        return EXIT_CONFIG, f"config error in {target}: {exc}"
    except NonFiniteError as exc:
        return EXIT_NUMERIC, f"numerical blow-up in {target}: {exc}"
    base = Path(out) if out is not None else Path(cfg.output_dir)
    try:
        write_outputs(result, base / cfg.name, fmt)
    except OSError as exc:
        return 1, f"cannot write outputs for {target}: {exc}"
    return EXIT_OK, format_summary(result.summary)


def cmd_run(args) -> int:
    jobs = [(t, args.out, args.seed, args.format) for t in args.targets]
    if args.jobs > 1 and len(jobs) > 1:
        with ProcessPoolExecutor(max_workers=args.jobs) as pool:
            results = list(pool.map(run_one, *zip(*jobs)))
    else:
        results = [run_one(*j) for j in jobs]
    status = EXIT_OK
    for code, msg in results:
        print(msg, file=sys.stdout if code == EXIT_OK else sys.stderr)
        status = max(status, code)
    return status


def cmd_presets(args) -> int:
    for name in config_mod.PRESETS:
        print(name)
    return EXIT_OK


def cmd_show(args) -> int:
    try:
        cfg = config_mod.resolve(args.target)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    sys.stdout.write(config_mod.dumps_json(cfg) + "\n" if args.json else config_mod.dumps(cfg))
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="hddservo", description="Dual-stage HDD servo simulation with adaptive "
                                     "disturbance identification and feedforward rejection.")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("run", help="run presets or config files")
    p.add_argument("targets", nargs="+", metavar="config|preset")
    p.add_argument("--out", default=None, help="output directory (default: config output_dir)")
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--jobs", type=int, default=1)
    p.add_argument("--format", choices=("csv", "csv+svg"), default="csv+svg")
    p.set_defaults(func=cmd_run)

    p = sub.add_parser("presets", help="list built-in presets")
    p.set_defaults(func=cmd_presets)

    p = sub.add_parser("show", help="print the resolved configuration")
    p.add_argument("target")
    p.add_argument("--json", action="store_true")
    p.set_defaults(func=cmd_show)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
