"""Command-line entry point: ``repfl simulate|gen-data|bound|sweep|defaults``."""

from __future__ import annotations

import argparse
import json
import logging
import sys
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path

from .config import ConfigError, ResolvedConfig, dump_defaults, parse_config
from .datagen import DataError, synth_dataset, write_csv
from .reports import RoundWriter, prepare_out_dir, write_sidecar
from .simulator import Simulation
from .theory import bound_summary

log = logging.getLogger("repfl")


def _load(path: str | None, overrides: dict[str, str] | None = None) -> ResolvedConfig:
    text = Path(path).read_text(encoding="utf-8") if path else ""
    return parse_config(text, overrides)


def simulate(cfg: ResolvedConfig, out_dir: str | Path, force: bool = False) -> Path:
    sim = Simulation(cfg.sim)
    out = prepare_out_dir(out_dir, force)
    n_clients = cfg.sim.n_clients if cfg.sim.aggregator.name == "reputation" else None
    write_sidecar(
        out,
        cfg.to_json(),
        sim.attackers,
        {"n_params": sim.n_params, "schedules": {str(a): str(s) for a, s in sim.schedules.items()}},
    )
    with RoundWriter(out, n_clients) as writer:
        for report in sim.iter_rounds():
            writer.write(report)
            log.info("round %d acc=%.4f asr=%.4f", report.round, report.accuracy, report.asr)
    return out


def _sweep_one(args: tuple[str | None, str, str, str, bool]) -> str:
    config_path, key, value, out_dir, force = args
    cfg = _load(config_path, {key: value})
    return str(simulate(cfg, out_dir, force))


def cmd_simulate(args: argparse.Namespace) -> int:
    overrides = {"sim.seed": str(args.seed)} if args.seed is not None else None
    cfg = _load(args.config, overrides)
    out = simulate(cfg, args.out, args.force)
    print(out)
    return 0


def cmd_gen_data(args: argparse.Namespace) -> int:
    cfg = _load(args.spec)
    write_csv(synth_dataset(cfg.data), args.out)
    print(args.out)
    return 0


def cmd_bound(args: argparse.Namespace) -> int:
    cfg = _load(args.config)
    print(json.dumps(bound_summary(cfg.theory), indent=2, sort_keys=True))
    return 0


def cmd_sweep(args: argparse.Namespace) -> int:
    values = [v.strip() for v in args.values.split(",") if v.strip()]
    if not values:
        raise ConfigError("--values is empty")
    # validate every variant before running any
    for v in values:
        _load(args.config, {args.param: v})
    root = Path(args.out)
    jobs = [(args.config, args.param, v, str(root / f"{args.param}={v}"), args.force) for v in values]
    if args.workers > 1:
        with ProcessPoolExecutor(max_workers=args.workers) as pool:
            done = list(pool.map(_sweep_one, jobs))
    else:
        done = [_sweep_one(job) for job in jobs]
    for path in done:
        print(path)
    return 0


def cmd_defaults(args: argparse.Namespace) -> int:
    sys.stdout.write(dump_defaults())
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="repfl", description="Reputation-weighted robust federated learning simulator")
    parser.add_argument("-v", "--verbose", action="store_true", help="log every round")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("simulate", help="run one experiment and write rounds.csv / reputation.csv / config.json")
    p.add_argument("config", nargs="?", help="config file (defaults used when omitted)")
    p.add_argument("--out", required=True)
    p.add_argument("--seed", type=int)
    p.add_argument("--force", action="store_true", help="write into an existing directory")
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("gen-data", help="write the synthetic dataset described by the data.* keys as CSV")
    p.add_argument("spec", nargs="?")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_gen_data)

    p = sub.add_parser("bound", help="print convergence-bound terms as JSON")
    p.add_argument("config", nargs="?")
    p.set_defaults(func=cmd_bound)

    p = sub.add_parser("sweep", help="run simulate once per value of one config key")
    p.add_argument("config", nargs="?")
    p.add_argument("--param", required=True)
    p.add_argument("--values", required=True, help="comma-separated")
    p.add_argument("--out", required=True)
    p.add_argument("--workers", type=int, default=1)
    p.add_argument("--force", action="store_true")
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("defaults", help="print every config key with its default")
    p.set_defaults(func=cmd_defaults)
    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(message)s")
    try:
        return args.func(args)
    except (ConfigError, DataError, ValueError, OSError) as exc:
        print(f"repfl: error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
