"""Class balance and output ranges of the synthetic design generator.

    python3 scripts/generator_calibration.py --n 30000 --seeds 0 1 2
"""

import argparse

import numpy as np

from pecsurrogate.converter import DEFAULT_BOUNDS, DEFAULT_CONSTANTS, generate_dataset


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--n", type=int, default=30000)
    ap.add_argument("--seeds", type=int, nargs="+", default=[0, 1, 2])
    args = ap.parse_args()

    print("constants:", DEFAULT_CONSTANTS)
    print(f"{'seed':>4} {'feasible':>9} {'eff p5':>7} {'eff p50':>8} {'T p5':>6} {'T p50':>6} {'T p95':>6}")
    for s in args.seeds:
        d = generate_dataset(args.n, DEFAULT_BOUNDS, s)
        f = d.feasible_only()
        e5, e50 = np.percentile(f.y[:, 0], [5, 50])
        t5, t50, t95 = np.percentile(f.y[:, 1], [5, 50, 95])
        print(f"{s:>4} {d.feasible.mean():>9.3f} {e5:>7.3f} {e50:>8.3f} {t5:>6.1f} {t50:>6.1f} {t95:>6.1f}")


if __name__ == "__main__":
    main()
