"""Command-line pipeline: generate -> train -> evaluate -> optimize -> report.

Output layout under ``--out`` (default taken from the config)::

    data/dataset.csv, data/summary.json
    models/classifier.bin, models/regressor.bin
    curves/*.csv            learning curves, calibration, interval-width histograms
    reports/*.json          classification, cross-validation, regression, summary
    optimize/comparison.json, optimize/runs.json, optimize/best_design.json, optimize/traces/*.csv

Errors exit with status 1 and a JSON object on stderr.
"""

from __future__ import annotations

import argparse
import json
import sys
from dataclasses import asdict, replace
from pathlib import Path

import numpy as np

from . import metrics
from .classifier import cross_validate, load_classifier, save_classifier, train_classifier, train_logistic_baseline
from .config import PipelineConfig, load_config, save_config
from .converter import PARAM_NAMES, ParameterBounds, generate_dataset, simulate
from .dataset import CSV_HEADER, label_feasibility, load_csv, save_csv, split
from .fitness import FitnessContext, FitnessObjective, evaluate_fitness_batch
from .optimizers import run_algorithm, run_comparison, write_trace_csv
from .regress.surrogate import TARGETS, RegressorConfig, load_surrogate, save_surrogate, train_surrogate


class PipelineError(RuntimeError):
    pass


class Paths:
    def __init__(self, root):
        self.root = Path(root)
        self.dataset = self.root / "data" / "dataset.csv"
        self.summary = self.root / "data" / "summary.json"
        self.classifier = self.root / "models" / "classifier.bin"
        self.regressor = self.root / "models" / "regressor.bin"
        self.curves = self.root / "curves"
        self.reports = self.root / "reports"
        self.optimize = self.root / "optimize"

    def ensure(self, *dirs):
        for d in dirs:
            d.mkdir(parents=True, exist_ok=True)


def _bounds(cfg: PipelineConfig) -> ParameterBounds:
    return ParameterBounds.from_pairs(cfg.data.bounds)


def _column_stats(values) -> dict:
    return {"mean": float(np.mean(values)), "std": float(np.std(values)),
            "min": float(np.min(values)), "max": float(np.max(values))}


# ---- commands ---------------------------------------------------------------


def cmd_generate(cfg: PipelineConfig, paths: Paths) -> dict:
    data = generate_dataset(cfg.data.n, _bounds(cfg), cfg.data.seed)
    paths.ensure(paths.dataset.parent)
    save_csv(paths.dataset, data)
    cols = {name: _column_stats(data.X[:, j]) for j, name in enumerate(CSV_HEADER[:9])}
    cols["y1"] = _column_stats(data.y[:, 0])
    cols["y2"] = _column_stats(data.y[:, 1])
    summary = {"n_rows": len(data), "n_feasible": int(data.feasible.sum()),
               "feasible_fraction": float(data.feasible.mean()), "seed": cfg.data.seed, "columns": cols}
    metrics.dump_json(paths.summary, summary)
    return summary


def _load_dataset(paths: Paths):
    if not paths.dataset.exists():
        raise PipelineError(f"dataset not found at {paths.dataset}; run the 'generate' command first")
    return load_csv(paths.dataset)


def _regressor_config(cfg: PipelineConfig) -> RegressorConfig:
    r = cfg.regressor
    return RegressorConfig(r.kind, r.ngboost, r.gpr, r.mcdropout)


def cmd_train(cfg: PipelineConfig, paths: Paths) -> dict:
    data = _load_dataset(paths)
    train, test = split(data, cfg.split)
    paths.ensure(paths.classifier.parent, paths.curves, paths.reports)

    clf = train_classifier(train, cfg.classifier, val=test)
    save_classifier(paths.classifier, clf)
    h = clf.history
    rows = [{"epoch": i + 1, "train_loss": h["train_loss"][i], "train_acc": h["train_acc"][i],
             "val_loss": h["val_loss"][i], "val_acc": h["val_acc"][i]} for i in range(len(h["train_loss"]))]
    metrics.write_rows_csv(paths.curves / "classifier_learning_curve.csv", rows,
                           ["epoch", "train_loss", "train_acc", "val_loss", "val_acc"])

    cv = cross_validate(data, cfg.split.k, cfg.classifier)
    metrics.dump_json(paths.reports / "classifier_cv.json", cv.to_dict())

    reg = train_surrogate(train, _regressor_config(cfg), val=test)
    save_surrogate(paths.regressor, reg)
    if reg.kind == "ngboost":
        c = reg.curves
        n_it = len(c["efficiency"]["train_nll"])
        rows = []
        for i in range(n_it):
            row = {"iteration": i + 1}
            for t in TARGETS:
                row[f"{t}_train_nll"] = c[t]["train_nll"][i]
                row[f"{t}_val_nll"] = c[t]["val_nll"][i] if c[t]["val_nll"] else float("nan")
            rows.append(row)
        cols = ["iteration"] + [f"{t}_{s}_nll" for t in TARGETS for s in ("train", "val")]
        metrics.write_rows_csv(paths.curves / "regressor_learning_curve.csv", rows, cols)
    elif reg.kind == "mcdropout":
        loss = reg.curves["mse"]["train_loss"]
        metrics.write_rows_csv(paths.curves / "regressor_learning_curve.csv",
                               [{"epoch": i + 1, "train_loss": v} for i, v in enumerate(loss)],
                               ["epoch", "train_loss"])
    return {"classifier": str(paths.classifier), "regressor": str(paths.regressor),
            "cv_mean_accuracy": cv.mean_accuracy, "cv_mean_bce": cv.mean_bce}


def _load_models(paths: Paths):
    missing = [p for p in (paths.classifier, paths.regressor) if not p.exists()]
    if missing:
        raise PipelineError(f"model file(s) missing: {', '.join(map(str, missing))}; run the 'train' command first")
    return load_classifier(paths.classifier), load_surrogate(paths.regressor)


def cmd_evaluate(cfg: PipelineConfig, paths: Paths) -> dict:
    data = _load_dataset(paths)
    clf, reg = _load_models(paths)
    train, test = split(data, cfg.split)
    paths.ensure(paths.curves, paths.reports)

    p = clf.predict_proba(test.X)
    y = test.feasible.astype(np.float64)
    cls_report = metrics.classification_metrics(p, y).to_dict()
    metrics.dump_json(paths.reports / "classification.json", cls_report)
    base = train_logistic_baseline(train, cfg.classifier)
    metrics.dump_json(paths.reports / "classification_baseline.json",
                      metrics.classification_metrics(base.predict_proba(test.X), y).to_dict())

    feas = test.feasible_only()
    mu, sd = reg.predict(feas.X)
    level = cfg.fitness.level
    reg_report = {"regressor": reg.kind, "level": level, "n_test": len(feas)}
    for j, t in enumerate(TARGETS):
        reg_report[t] = metrics.regression_report(mu[:, j], sd[:, j], feas.y[:, j], level).to_dict()
        cal = metrics.calibration_curve(mu[:, j], sd[:, j], feas.y[:, j], cfg.calibration_grid)
        metrics.write_rows_csv(paths.curves / f"calibration_{t}.csv", cal.rows(), ["nominal", "observed"])
        counts, edges = metrics.interval_width_histogram(sd[:, j], level, cfg.hiw_bins)
        metrics.write_rows_csv(paths.curves / f"hiw_{t}.csv",
                               [{"bin_lo": float(edges[i]), "bin_hi": float(edges[i + 1]), "count": int(counts[i])}
                                for i in range(len(counts))], ["bin_lo", "bin_hi", "count"])
    reg_report["nll_mean"] = float(np.mean([reg_report[t]["nll"] for t in TARGETS]))
    metrics.dump_json(paths.reports / "regression.json", reg_report)
    return {"classification": cls_report, "regression": reg_report}


def fitness_context(cfg: PipelineConfig, clf, reg, seed: int) -> FitnessContext:
    f = cfg.fitness
    return FitnessContext(clf, reg, goal_temp=f.goal_temp, penalty_factor=f.penalty_factor, level=f.level,
                          mode=f.mode, seed=cfg.fitness_seed + seed, penalty=f.penalty, objective=f.objective,
                          bounds=_bounds(cfg))


def design_check(ctx: FitnessContext, x) -> dict:
    """Surrogate prediction, classifier confidence and simulator ground truth for one design."""
    x = np.asarray(x, dtype=np.float64)
    v = evaluate_fitness_batch(replace(ctx, mode="deterministic"), x[None, :])[0]
    sim = simulate(x[None, :])
    t_eff, t_temp = float(sim["efficiency"][0]), float(sim["temperature"][0])
    return {
        "design": {k: float(val) for k, val in zip(PARAM_NAMES, x)},
        "x": [float(val) for val in x],
        "p_infeasible": v.p_infeasible,
        "predicted": {"efficiency_mu": v.eff_mu, "efficiency_sigma": v.eff_std,
                      "temperature_mu": v.temp_mu, "temperature_sigma": v.temp_std},
        "simulated": {"efficiency": t_eff, "temperature": t_temp, "converged": bool(sim["converged"][0]),
                      "feasible": bool(label_feasibility(t_eff, t_temp))},
        "within_3sigma": {"efficiency": abs(t_eff - v.eff_mu) <= 3 * v.eff_std,
                          "temperature": abs(t_temp - v.temp_mu) <= 3 * v.temp_std},
    }


def cmd_optimize(cfg: PipelineConfig, paths: Paths) -> dict:
    clf, reg = _load_models(paths)
    bounds = _bounds(cfg)
    opt = cfg.optimize
    traces = paths.optimize / "traces"
    paths.ensure(paths.optimize, traces)

    def factory(seed):
        return FitnessObjective(fitness_context(cfg, clf, reg, seed))

    comp = run_comparison(factory, bounds, opt.seeds, opt.algorithms, opt.configs())
    out = {"fitness": asdict(cfg.fitness), "seeds": list(opt.seeds), "rows": comp.rows}
    runs = comp.runs
    if opt.baseline:
        base = [run_algorithm("random", factory(s), bounds, opt.random, seed=s) for s in opt.seeds]
        runs = {**runs, "random": base}
        fs = [r.best_f for r in base]
        out["baseline"] = {"algorithm": "random", "median_best_fitness": float(np.median(fs)),
                           "best_fitness": float(np.min(fs)), "evaluations": base[0].evaluations,
                           "wall_time": float(np.median([r.wall_time for r in base]))}
    metrics.dump_json(paths.optimize / "comparison.json", out)

    run_rows = []
    for name, results in runs.items():
        for r in results:
            write_trace_csv(traces / f"{name}_seed{r.seed}.csv", r)
            check = design_check(fitness_context(cfg, clf, reg, r.seed), r.best_x)
            run_rows.append({"algorithm": name, "seed": r.seed, "best_fitness": r.best_f,
                             "evaluations": r.evaluations, **r.extra, **check})
    metrics.dump_json(paths.optimize / "runs.json", {"runs": run_rows})

    primary = [r for r in run_rows if r["algorithm"] in opt.algorithms]
    best = min(primary, key=lambda r: r["best_fitness"])
    per_alg = {}
    for name in opt.algorithms:
        rs = [r for r in primary if r["algorithm"] == name]
        per_alg[name] = min(rs, key=lambda r: r["best_fitness"])
    metrics.dump_json(paths.optimize / "best_design.json", {"overall": best, "per_algorithm": per_alg})
    return out


def cmd_report(cfg: PipelineConfig, paths: Paths) -> dict:
    """Collect the JSON reports that exist into ``reports/summary.json``."""
    parts = {
        "dataset": paths.summary,
        "classification": paths.reports / "classification.json",
        "classification_baseline": paths.reports / "classification_baseline.json",
        "classifier_cv": paths.reports / "classifier_cv.json",
        "regression": paths.reports / "regression.json",
        "comparison": paths.optimize / "comparison.json",
        "best_design": paths.optimize / "best_design.json",
    }
    found = {k: json.loads(p.read_text()) for k, p in parts.items() if p.exists()}
    if not found:
        raise PipelineError(f"nothing to report under {paths.root}; run the pipeline first")
    found["missing"] = sorted(k for k, p in parts.items() if not p.exists())
    paths.ensure(paths.reports)
    metrics.dump_json(paths.reports / "summary.json", found)
    return found


def cmd_run(cfg: PipelineConfig, paths: Paths) -> dict:
    for fn in (cmd_generate, cmd_train, cmd_evaluate, cmd_optimize):
        fn(cfg, paths)
    return cmd_report(cfg, paths)


COMMANDS = {"generate": cmd_generate, "train": cmd_train, "evaluate": cmd_evaluate, "optimize": cmd_optimize,
            "report": cmd_report, "run": cmd_run}


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="pecsurrogate", description="Surrogate-assisted converter design pipeline")
    ap.add_argument("command", choices=sorted(COMMANDS))
    ap.add_argument("--config", help="JSON config file (defaults are used when omitted)")
    ap.add_argument("--seed", type=int, help="master seed; overrides every component seed")
    ap.add_argument("--out", help="output directory (overrides the config)")
    ap.add_argument("--deterministic-fitness", action="store_true", help="use predicted means instead of draws")
    return ap


def resolve_config(args) -> PipelineConfig:
    cfg = load_config(args.config) if args.config else PipelineConfig()
    if args.seed is not None:
        if args.seed < 0:
            raise PipelineError("--seed must be non-negative")
        cfg = cfg.with_seed(args.seed)
    if args.out:
        cfg = replace(cfg, out=args.out)
    if args.deterministic_fitness:
        cfg = replace(cfg, fitness=replace(cfg.fitness, mode="deterministic"))
    return cfg


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        cfg = resolve_config(args)
        paths = Paths(cfg.out)
        paths.ensure(paths.root)
        save_config(paths.root / "config.json", cfg)
        COMMANDS[args.command](cfg, paths)
    except Exception as e:  # noqa: BLE001 - every failure becomes a JSON error record
        err = {"error": type(e).__name__, "message": str(e), "command": args.command}
        print(json.dumps(err), file=sys.stderr)
        return 1
    print(json.dumps({"command": args.command, "status": "ok", "out": str(cfg.out)}))
    return 0


if __name__ == "__main__":
    sys.exit(main())
