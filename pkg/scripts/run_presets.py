"""Run every shipped preset through the CLI and write CSVs under results/.

Usage: python scripts/run_presets.py [--seed N] [--out-dir DIR] [--skip mc-validate ...]
"""

import argparse
import sys
import time
from pathlib import Path

from irsisac.cli import main as cli

ROOT = Path(__file__).resolve().parent.parent
PRESETS = {
    "detect-sweep": "detect_sweep.toml",
    "crb-sweep": "crb_sweep.toml",
    "isac-region": "isac_region.toml",
    "mc-validate": "mc_validate.toml",
}


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--seed", type=int, help="override the seed of every config")
    parser.add_argument("--out-dir", type=Path, default=ROOT / "results")
    parser.add_argument("--skip", nargs="*", default=[], choices=sorted(PRESETS))
    args = parser.parse_args(argv)

    worst = 0
    for name, config in PRESETS.items():
        if name in args.skip:
            continue
        out = args.out_dir / config.replace(".toml", ".csv")
        cmd = [name, "--config", str(ROOT / "configs" / config), "--out", str(out)]
        if args.seed is not None:
            cmd += ["--seed", str(args.seed)]
        start = time.perf_counter()
        code = cli(cmd)
        print(f"{name:13s} exit {code}  {time.perf_counter() - start:6.1f} s  {out}")
        worst = max(worst, code)
    return worst


if __name__ == "__main__":
    sys.exit(main())
