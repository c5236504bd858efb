"""Command line entry point: single runs, sweeps, packaged experiments."""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from .agent import catalog_csv
from .config import SimConfig
from .engine import EXPERIMENTS, SweepSpec, run_simulation, run_sweep
from .errors import ConfigError
from .model import EventModel

EXIT_CONFIG = 2


def _load_config(path) -> SimConfig:
    if path is None:
        return SimConfig().validate()
    try:
        return SimConfig.load(path)
    except OSError as exc:
        raise ConfigError(f"cannot read {path}: {exc}") from None


def load_sweep_spec(path) -> SweepSpec:
    """Read a sweep spec: a JSON object with ``base``, ``axes`` and ``replications``.

    ``base`` is either a path to a config file (relative to the spec) or an
    object of flat config keys. Event-model axis entries are objects with
    EventModel fields; criteria entries are two-element lists.
    """
    path = Path(path)
    try:
        raw = json.loads(path.read_text(encoding="utf-8"))
    except (OSError, json.JSONDecodeError) as exc:
        raise ConfigError(f"cannot read sweep spec {path}: {exc}") from None
    if not isinstance(raw, dict):
        raise ConfigError("sweep spec must be a JSON object")
    base = raw.get("base", {})
    if isinstance(base, str):
        cfg = _load_config(path.parent / base)
    elif isinstance(base, dict):
        cfg = SimConfig.loads("".join(f"{k} = {v}\n" for k, v in base.items()))
    else:
        raise ConfigError("sweep spec 'base' must be a path or an object")
    axes = {}
    for name, values in raw.get("axes", {}).items():
        if not isinstance(values, list) or not values:
            raise ConfigError(f"axis {name!r} needs a non-empty list of values")
        if name == "event_model":
            try:
                values = [EventModel(**{k: tuple(v) if isinstance(v, list) else v for k, v in item.items()})
                          for item in values]
            except TypeError as exc:
                raise ConfigError(str(exc)) from None
        elif name == "criteria":
            values = [tuple(v) for v in values]
        axes[name] = values
    try:
        return SweepSpec(cfg, axes, int(raw.get("replications", 50)))
    except ValueError as exc:
        raise ConfigError(str(exc)) from None


def cmd_run(args) -> int:
    cfg = _load_config(args.config)
    if args.seed is not None:
        cfg = cfg.with_seed(args.seed).validate()
    record = run_simulation(cfg)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    (out / "run.csv").write_text(record.to_csv(), encoding="utf-8", newline="\n")
    return 0


def cmd_sweep(args) -> int:
    spec = load_sweep_spec(args.spec)
    try:
        result = run_sweep(spec, workers=args.workers)
    except ValueError as exc:
        raise ConfigError(str(exc)) from None
    result.write(Path(args.out))
    return 0


def cmd_experiment(args) -> int:
    base = _load_config(args.config)
    result = EXPERIMENTS[args.name](base, replications=args.replications, workers=args.workers)
    result.write(Path(args.out))
    return 0


def cmd_profiles(args) -> int:
    sys.stdout.write(catalog_csv())
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="primal", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("run", help="one replication, writes run.csv")
    p.add_argument("--config", type=Path)
    p.add_argument("--seed", type=int)
    p.add_argument("--out", type=Path, required=True)
    p.set_defaults(func=cmd_run)

    p = sub.add_parser("sweep", help="grid of configurations, writes sweep.csv and final.csv")
    p.add_argument("--spec", type=Path, required=True)
    p.add_argument("--out", type=Path, required=True)
    p.add_argument("--workers", type=int, default=1)
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("experiment", help="one of the packaged experiments")
    p.add_argument("name", choices=sorted(EXPERIMENTS))
    p.add_argument("--out", type=Path, required=True)
    p.add_argument("--config", type=Path, help="base configuration")
    p.add_argument("--replications", type=int, default=50)
    p.add_argument("--workers", type=int, default=1)
    p.set_defaults(func=cmd_experiment)

    p = sub.add_parser("profiles", help="communication profile catalog")
    p.add_argument("--list", action="store_true", required=True)
    p.set_defaults(func=cmd_profiles)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
