"""Optimizer comparison on trained models, in both fitness modes.

Needs a run directory produced by ``python3 -m pecsurrogate train``.

    python3 scripts/compare_optimizers.py runs/default --seeds 10
"""

import argparse
from dataclasses import replace

import numpy as np

from pecsurrogate.cli import Paths, _load_models, design_check, fitness_context
from pecsurrogate.config import PipelineConfig
from pecsurrogate.fitness import FitnessObjective
from pecsurrogate.optimizers import ALGORITHMS, run_algorithm


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("run_dir")
    ap.add_argument("--seeds", type=int, default=10)
    ap.add_argument("--goal-temp", type=float, default=28.0)
    args = ap.parse_args()

    clf, reg = _load_models(Paths(args.run_dir))
    base = PipelineConfig()
    print(f"{'mode':<14} {'alg':<7} {'med F':>9} {'med eff':>8} {'med |dT|':>9} {'feasible':>9}")
    for mode in ("stochastic", "deterministic"):
        cfg = replace(base, fitness=replace(base.fitness, mode=mode, goal_temp=args.goal_temp))
        for name in ALGORITHMS + ("random",):
            fs, eff, dT, feas = [], [], [], 0
            for s in range(args.seeds):
                ctx = fitness_context(cfg, clf, reg, s)
                r = run_algorithm(name, FitnessObjective(ctx), ctx.bounds, seed=s)
                chk = design_check(ctx, r.best_x)
                fs.append(r.best_f)
                eff.append(chk["predicted"]["efficiency_mu"])
                dT.append(abs(chk["predicted"]["temperature_mu"] - args.goal_temp))
                feas += chk["simulated"]["feasible"]
            print(f"{mode:<14} {name:<7} {np.median(fs):>9.4f} {np.median(eff):>8.4f} {np.median(dT):>9.2f} "
                  f"{feas:>5}/{args.seeds}")


if __name__ == "__main__":
    main()
