"""Held-out metrics of the three probabilistic regressors on one split.

    python3 scripts/compare_regressors.py --n 6000 --seed 0
"""

import argparse
import time

from pecsurrogate.converter import DEFAULT_BOUNDS, generate_dataset
from pecsurrogate.dataset import SplitSpec, split
from pecsurrogate.metrics import regression_report
from pecsurrogate.regress.surrogate import TARGETS, RegressorConfig, train_surrogate


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--n", type=int, default=6000)
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--kinds", nargs="+", default=["ngboost", "gpr", "mcdropout"])
    args = ap.parse_args()

    data = generate_dataset(args.n, DEFAULT_BOUNDS, args.seed)
    train, test = split(data, SplitSpec(seed=args.seed + 1))
    test = test.feasible_only()
    print(f"{'model':<10} {'target':<12} {'R2':>7} {'RMSE':>9} {'NLL':>8} {'CRPS':>8} {'PICP':>6} {'MPIW':>8} {'fit s':>6}")
    for kind in args.kinds:
        t0 = time.perf_counter()
        reg = train_surrogate(train, RegressorConfig(kind=kind))
        dt = time.perf_counter() - t0
        mu, sd = reg.predict(test.X)
        for j, t in enumerate(TARGETS):
            r = regression_report(mu[:, j], sd[:, j], test.y[:, j])
            print(f"{kind:<10} {t:<12} {r.r2:>7.4f} {r.rmse:>9.4f} {r.nll:>8.3f} {r.crps:>8.4f} "
                  f"{r.picp:>6.3f} {r.mpiw:>8.3f} {dt:>6.1f}")


if __name__ == "__main__":
    main()
