"""Command line entry point: ``riskbandit run | plot | validate``."""
from __future__ import annotations

import argparse
import logging
import sys
import time
from pathlib import Path

from .errors import CapExceeded, InvalidSpec, RankDeficient
from .harness import (
    PRESETS,
    ConfigError,
    build_instance,
    default_output_dir,
    derive_seed,
    design_dump,
    load_config,
    parse_config,
    preset_config,
    run_experiment,
)
from .plot import PlotError, plot

log = logging.getLogger("riskbandit")


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="riskbandit", description="Risk-aware linear bandit experiments.")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", help="run a policy x seed grid and write regret reports")
    src = run.add_mutually_exclusive_group(required=True)
    src.add_argument("--config", type=Path, help="JSON run config")
    src.add_argument("--preset", choices=sorted(PRESETS), help="built-in figure setup")
    run.add_argument("--seeds", type=int, help="number of replications (overrides config)")
    run.add_argument("--T", dest="horizon", type=int, help="horizon (overrides config)")
    run.add_argument("--out", type=Path, help="output directory")
    run.add_argument("--jobs", type=int, default=1, help="parallel worker processes")
    run.add_argument("--plot", action="store_true", help="also render regret.svg")
    run.add_argument("--dump-design", action="store_true", help="write the G-optimal design as design.json")
    run.add_argument("--trajectories", action="store_true", help="export every trajectory as CSV + JSON")

    pl = sub.add_parser("plot", help="render an aggregate CSV as SVG")
    pl.add_argument("--in", dest="csv", type=Path, required=True)
    pl.add_argument("--out", type=Path, required=True)
    pl.add_argument("--title")

    val = sub.add_parser("validate", help="check a config without running it")
    val.add_argument("--config", type=Path, required=True)
    return parser


def _load_run_config(args):
    if args.preset:
        cfg = preset_config(args.preset, T=args.horizon)
        name = args.preset
    else:
        cfg = load_config(args.config)
        if args.horizon is not None:
            doc = dict(cfg.source, T=args.horizon)
            cfg = parse_config(doc, base_dir=args.config.parent)
        name = args.config.stem
    if args.seeds is not None:
        if args.seeds < 1:
            raise ConfigError("seeds", "need at least one seed")
        cfg.seeds = [derive_seed(cfg.master_seed or 0, i) for i in range(args.seeds)]
    out = args.out or cfg.output_dir or default_output_dir(name)
    return cfg, Path(out)


def _cmd_run(args) -> int:
    cfg, out = _load_run_config(args)
    out.mkdir(parents=True, exist_ok=True)
    if args.dump_design:
        (out / "design.json").write_text(design_dump(cfg) + "\n")
    start = time.perf_counter()
    report = run_experiment(cfg, jobs=args.jobs, trajectories_dir=out / "trajectories" if args.trajectories else None)
    paths = report.write(out)
    log.info("finished %d runs in %.1fs", len(report.curves), time.perf_counter() - start)
    if args.plot:
        plot(paths["aggregate"], out / "regret.svg", title=f"{report.scenario}, T={cfg.T}")
    for policy in report.policies:
        print(f"{policy:>10s}  final mean regret {report.final_mean(policy):12.2f}")
    print(f"wrote {paths['aggregate']}")
    return 0


def _cmd_validate(args) -> int:
    cfg = load_config(args.config)
    instance, info = build_instance(cfg)
    print(
        f"ok: {info['scenario']} d={instance.d} K={instance.K} T={cfg.T} "
        f"policies={','.join(p.name for p in cfg.policies)} seeds={len(cfg.seeds)}"
    )
    return 0


def main(argv: list[str] | None = None) -> int:
    args = _build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(name)s: %(message)s")
    try:
        if args.command == "run":
            return _cmd_run(args)
        if args.command == "plot":
            plot(args.csv, args.out, args.title)
            return 0
        return _cmd_validate(args)
    except (ConfigError, CapExceeded, InvalidSpec, RankDeficient, PlotError, OSError, ValueError, KeyError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
