"""Write the five figure datasets as CSV files.

    python3 scripts/reproduce_figures.py --out figures --samples 100000
"""

import argparse
import os
import sys

from mmse_lab import cli
from mmse_lab.figures import PRESETS


def main() -> int:
    p = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    p.add_argument("--out", default="figures", help="output directory")
    p.add_argument("--samples", type=int, default=100_000, help="MC draws per point")
    p.add_argument("--seed", type=int, default=1)
    p.add_argument("--ids", type=int, nargs="*", default=sorted(PRESETS))
    args = p.parse_args()
    os.makedirs(args.out, exist_ok=True)
    for fig_id in args.ids:
        path = os.path.join(args.out, f"figure{fig_id}.csv")
        code = cli.main(["figure", "--id", str(fig_id), "--samples", str(args.samples),
                         "--seed", str(args.seed), "--output", path])
        if code:
            return code
        print(path)
    return 0


if __name__ == "__main__":
    sys.exit(main())
