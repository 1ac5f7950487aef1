#!/usr/bin/env python3
"""Run one or all bundled experiment presets and print where results went.

Full-scale presets take minutes; pass --scale 0.02 for a quick look.
"""

import argparse
import sys
import time

from codedlb.harness import run_preset

PRESET_NAMES = ("fig1", "fig2", "fig3", "fig4")


def main() -> int:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("preset", choices=PRESET_NAMES + ("all",))
    parser.add_argument("--scale", type=float, default=1.0)
    parser.add_argument("--seed", type=int, default=42)
    parser.add_argument("--out-dir", default="results")
    parser.add_argument("--workers", type=int, default=None)
    args = parser.parse_args()

    names = PRESET_NAMES if args.preset == "all" else (args.preset,)
    for name in names:
        start = time.perf_counter()
        csv_path, json_path = run_preset(
            name, args.out_dir, scale=args.scale,
            master_seed=args.seed, workers=args.workers,
        )
        elapsed = time.perf_counter() - start
        print(f"{name}: {csv_path} + {json_path} ({elapsed:.1f}s)")
    return 0


if __name__ == "__main__":
    sys.exit(main())
