"""Command-line entry point.

Exit codes: 0 success, 2 configuration error, 3 every point infeasible.
"""

from __future__ import annotations

import argparse
import sys

from .config import MAX_SEED, Preset, parse_config
from .errors import ConfigError
from .experiments import run_experiment, write_csv

EXIT_OK, EXIT_CONFIG, EXIT_INFEASIBLE = 0, 2, 3

_HELP = {
    Preset.DETECT_SWEEP: "closed-form detection probability versus N",
    Preset.CRB_SWEEP: "minimized angle CRB versus N",
    Preset.ISAC_REGION: "communication SNR versus CRB bound",
    Preset.MC_VALIDATE: "Monte-Carlo check of the detection closed forms",
}


def _seed(text: str) -> int:
    try:
        value = int(text, 0)
    except ValueError:
        raise argparse.ArgumentTypeError(f"invalid seed {text!r}") from None
    if not 0 <= value <= MAX_SEED:
        raise argparse.ArgumentTypeError("seed must be an unsigned 64-bit integer")
    return value


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="irsisac", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)
    for preset, text in _HELP.items():
        p = sub.add_parser(preset.value, help=text, description=text)
        p.add_argument("--config", required=True, help="TOML experiment file")
        p.add_argument("--seed", type=_seed, help="overrides the seed in the config")
        p.add_argument("--out", help="CSV output path (overrides [output] path)")
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:  # argparse uses 2 for usage errors already
        return int(exc.code or 0)
    try:
        with open(args.config, encoding="utf-8") as fh:
            text = fh.read()
        cfg = parse_config(text, preset=args.command, seed=args.seed, output_path=args.out)
        if cfg.output_path is None:
            raise ConfigError("no output path: pass --out or set [output] path")
    except (OSError, ConfigError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    records = run_experiment(cfg)
    write_csv(records, cfg.output_path)
    feasible = sum(r.feasible for r in records)
    print(f"{cfg.preset.value}: {len(records)} rows ({feasible} feasible) -> {cfg.output_path}")
    return EXIT_OK if feasible else EXIT_INFEASIBLE


if __name__ == "__main__":
    sys.exit(main())
