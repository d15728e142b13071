"""Command-line entry point: generate, train, evaluate, benchmark.

Every command is driven by a JSON config file and is deterministic
given that file (seeds included); ``--seed`` overrides the config seed
and ``--out`` the output directory. Set ``CAUSALAE_LOG`` to change log
verbosity (DEBUG, INFO, WARNING, ...).
"""

from __future__ import annotations

import argparse
import json
import logging
import os
import sys
from pathlib import Path

import numpy as np

from . import baselines, data, metrics, model as cae, store
from .exceptions import CausalAeError, ConfigurationError, EvaluationError

log = logging.getLogger("causalae")

EXIT_OK = 0
EXIT_CONFIG = 1
EXIT_RUNTIME = 2

MODEL_KINDS = ("cae",) + baselines.T_LEARNER_KINDS


def derive_seed(*parts: int) -> int:
    """Deterministic child seed from integer parts."""
    return int(np.random.SeedSequence([int(p) for p in parts]).generate_state(1)[0])


def load_config(path) -> dict:
    try:
        with open(path) as fh:
            cfg = json.load(fh)
    except FileNotFoundError:
        raise ConfigurationError(f"config file not found: {path}") from None
    except json.JSONDecodeError as exc:
        raise ConfigurationError(f"config file {path} is not valid JSON: {exc}") from exc
    if not isinstance(cfg, dict):
        raise ConfigurationError("config root must be a JSON object")
    return cfg


def write_json(path, obj) -> None:
    with open(path, "w") as fh:
        json.dump(obj, fh, indent=2, sort_keys=True)
        fh.write("\n")


def generator_config_from(cfg: dict, seed_override: int | None) -> data.GeneratorConfig:
    gen = dict(cfg)
    if seed_override is not None:
        gen["seed"] = seed_override
    try:
        return data.GeneratorConfig(**{
            **gen,
            "population_weights": tuple(gen.get("population_weights", (0.25,) * 4)),
        })
    except TypeError as exc:
        raise ConfigurationError(f"bad generator config: {exc}") from exc


def dataset_from_config(cfg: dict, seed_override: int | None = None) -> data.Dataset:
    source = cfg.get("dataset")
    if not isinstance(source, dict):
        raise ConfigurationError("config needs a 'dataset' object")
    if "generator" in source:
        return data.generate_synthetic(
            generator_config_from(source["generator"], seed_override)
        )
    if "csv" in source:
        if "schema" not in source:
            raise ConfigurationError("csv datasets need a 'schema' path")
        return data.load_csv(source["csv"], data.load_schema(source["schema"]))
    raise ConfigurationError("dataset must specify 'generator' or 'csv'+'schema'")


def _model_name(spec: dict, fallback: str) -> str:
    return str(spec.get("name", fallback))


def train_model_spec(spec: dict, train_ds: data.Dataset, seed: int):
    """Train one model described by a config entry on a (standardized) dataset."""
    if not isinstance(spec, dict) or "kind" not in spec:
        raise ConfigurationError("each model entry needs a 'kind' field")
    kind = spec["kind"]
    if kind not in MODEL_KINDS:
        raise ConfigurationError(f"unknown model kind {kind!r} (one of {MODEL_KINDS})")
    hyper = {k: v for k, v in spec.items() if k not in ("kind", "name")}
    if kind == "cae":
        if "encoder_hidden_sizes" in hyper and hyper["encoder_hidden_sizes"] is not None:
            hyper["encoder_hidden_sizes"] = tuple(hyper["encoder_hidden_sizes"])
        try:
            config = cae.CaeConfig(**{**hyper, "seed": seed})
        except TypeError as exc:
            raise ConfigurationError(f"bad cae model entry: {exc}") from exc
        m = cae.init_model(config, d=train_ds.feature_dim)
        _, report = cae.train(m, train_ds)
        return m, report.to_dict()
    cfg_cls = baselines.LogisticConfig if kind == "t_lr" else baselines.MlpConfig
    try:
        config = cfg_cls(**{**hyper, "seed": seed})
    except TypeError as exc:
        raise ConfigurationError(f"bad {kind} model entry: {exc}") from exc
    learner = baselines.train_t_learner(kind, train_ds, config)
    report = {
        "kind": kind,
        "seed": seed,
        "final_loss_treated": learner.model_treated.epoch_losses[-1],
        "final_loss_control": learner.model_control.epoch_losses[-1],
    }
    return learner, report


def ite_scores(model, features: np.ndarray) -> np.ndarray:
    if isinstance(model, cae.CausalAutoencoder):
        return cae.estimate_cates(model, features)
    return baselines.predict_ite(model, features)


def evaluate_model(model, dataset: data.Dataset) -> tuple[dict, metrics.UpliftCurve]:
    """Metric dict plus the uplift curve for one model on one dataset."""
    if isinstance(model, cae.CausalAutoencoder) and dataset.feature_dim != model.layout.feature_dim:
        raise ConfigurationError(
            f"dataset has {dataset.feature_dim} features, model expects "
            f"{model.layout.feature_dim}"
        )
    scores = ite_scores(model, dataset.features)
    curve = metrics.auuc(scores, dataset.y_obs, dataset.treatment)
    report: dict = {"auuc": curve.auuc, "n": dataset.n}
    if dataset.has_ground_truth:
        report["pehe"] = metrics.pehe(dataset.true_ite, scores)
        if isinstance(model, cae.CausalAutoencoder):
            report["population_accuracy"] = metrics.population_accuracy(
                cae.predict_populations(model, dataset.features),
                dataset.population_codes,
            )
    return report, curve


def _out_dir(cfg: dict, override: str | None) -> Path:
    out = override if override is not None else cfg.get("out", ".")
    path = Path(out)
    path.mkdir(parents=True, exist_ok=True)
    return path


def cmd_generate(cfg: dict, out: str | None, seed: int | None) -> int:
    source = cfg.get("dataset", {})
    if "generator" not in source:
        raise ConfigurationError("generate needs dataset.generator settings")
    gen_cfg = generator_config_from(source["generator"], seed)
    dataset = data.generate_synthetic(gen_cfg)
    out_dir = _out_dir(cfg, out)
    csv_path = out_dir / "dataset.csv"
    data.save_csv(dataset, csv_path)
    data.save_schema(
        data.default_schema(dataset.feature_dim, dataset.has_ground_truth),
        out_dir / "schema.json",
    )
    log.info("wrote %s rows to %s", dataset.n, csv_path)
    print(f"generated {dataset.n} rows x {dataset.feature_dim} features -> {csv_path}")
    return EXIT_OK


def cmd_train(cfg: dict, out: str | None, seed: int | None) -> int:
    spec = cfg.get("model")
    if not isinstance(spec, dict):
        raise ConfigurationError("train needs a 'model' object in the config")
    base_seed = int(cfg.get("seed", 0)) if seed is None else seed
    test_fraction = float(cfg.get("test_fraction", 0.2))
    dataset = dataset_from_config(cfg)
    train_ds, _test_ds = data.split(dataset, test_fraction, derive_seed(base_seed, 1))
    train_std, _, scaler = data.standardize(train_ds, _test_ds)
    trained, report = train_model_spec(spec, train_std, derive_seed(base_seed, 2))
    out_dir = _out_dir(cfg, out)
    model_path = out_dir / "model.json"
    store.save_model(model_path, trained, scaler)
    write_json(out_dir / "train_report.json", report)
    name = _model_name(spec, spec["kind"])
    print(f"trained {name} on {train_std.n} rows -> {model_path}")
    return EXIT_OK


def cmd_evaluate(cfg: dict, model_path: str, out: str | None, seed: int | None) -> int:
    del seed  # evaluation has no randomness
    trained, scaler = store.load_model(model_path)
    dataset = dataset_from_config(cfg)
    if scaler is not None:
        dataset = scaler.transform_dataset(dataset)
    report, curve = evaluate_model(trained, dataset)
    out_dir = _out_dir(cfg, out)
    write_json(out_dir / "eval_report.json", report)
    curve.to_csv(out_dir / "uplift.csv")
    parts = [f"auuc={report['auuc']:.4f}"]
    if "pehe" in report:
        parts.append(f"pehe={report['pehe']:.4f}")
    if "population_accuracy" in report:
        parts.append(f"population_accuracy={report['population_accuracy']:.4f}")
    print(f"evaluated {model_path} on {report['n']} rows: " + ", ".join(parts))
    return EXIT_OK


def _aggregate(values: list[float]) -> dict:
    arr = np.asarray(values, dtype=np.float64)
    std = float(np.std(arr, ddof=1)) if len(arr) > 1 else 0.0
    return {"mean": float(np.mean(arr)), "std": std, "values": [float(v) for v in arr]}


METRIC_GOALS = {"auuc": "max", "pehe": "min", "population_accuracy": "max"}


def run_benchmark(cfg: dict, seed: int | None = None) -> dict:
    """Fresh split + training per trial for every model; aggregated report."""
    specs = cfg.get("models")
    if not isinstance(specs, list) or len(specs) < 2:
        raise ConfigurationError("benchmark needs a 'models' list with >= 2 entries")
    names = [_model_name(s, f"model{i}") for i, s in enumerate(specs)]
    if len(set(names)) != len(names):
        raise ConfigurationError("model names must be unique")
    trials = int(cfg.get("trials", 10))
    if trials < 1:
        raise ConfigurationError("trials must be >= 1")
    base_seed = int(cfg.get("seed", 0)) if seed is None else seed
    test_fraction = float(cfg.get("test_fraction", 0.2))
    dataset = dataset_from_config(cfg)

    per_trial: list[dict] = []
    for trial in range(trials):
        split_seed = derive_seed(base_seed, trial, 1)
        train_seed = derive_seed(base_seed, trial, 2)
        train_ds, test_ds = data.split(dataset, test_fraction, split_seed)
        train_std, test_std, _ = data.standardize(train_ds, test_ds)
        trial_metrics: dict = {}
        for spec, name in zip(specs, names):
            try:
                trained, _ = train_model_spec(spec, train_std, train_seed)
                report, _ = evaluate_model(trained, test_std)
            except CausalAeError as exc:
                raise EvaluationError(f"trial {trial} failed for {name}: {exc}") from exc
            trial_metrics[name] = report
        per_trial.append(trial_metrics)
        log.info("trial %d/%d done", trial + 1, trials)

    summary: dict = {}
    for name in names:
        summary[name] = {}
        for metric in METRIC_GOALS:
            values = [t[name][metric] for t in per_trial if metric in t[name]]
            if len(values) == len(per_trial):
                summary[name][metric] = _aggregate(values)

    wilcoxon: dict = {}
    for metric, goal in METRIC_GOALS.items():
        with_metric = [n for n in names if metric in summary[n]]
        if len(with_metric) < 2:
            continue
        key = lambda n: summary[n][metric]["mean"]
        best = (max if goal == "max" else min)(with_metric, key=key)
        p_values = {}
        for name in with_metric:
            if name == best:
                continue
            result = metrics.wilcoxon_signed_rank(
                np.asarray(summary[best][metric]["values"]),
                np.asarray(summary[name][metric]["values"]),
            )
            p_values[name] = result.p_value
        wilcoxon[metric] = {"best": best, "p_vs_best": p_values}

    return {
        "seed": base_seed,
        "trials": trials,
        "test_fraction": test_fraction,
        "models": names,
        "per_trial": per_trial,
        "summary": summary,
        "wilcoxon": wilcoxon,
    }


def _format_cell(stats: dict | None) -> str:
    if stats is None:
        return "-"
    return f"{stats['mean']:.4f} +/- {stats['std']:.4f}"


def print_benchmark_table(report: dict) -> None:
    cols = ["auuc", "pehe", "population_accuracy"]
    header = f"{'model':<16}" + "".join(f"{c:>26}" for c in cols)
    print(header)
    print("-" * len(header))
    for name in report["models"]:
        row = f"{name:<16}"
        for c in cols:
            row += f"{_format_cell(report['summary'][name].get(c)):>26}"
        print(row)
    for metric, info in report["wilcoxon"].items():
        pvals = ", ".join(f"{n}: p={p:.4g}" for n, p in info["p_vs_best"].items())
        print(f"wilcoxon[{metric}] best={info['best']} vs " + (pvals or "(none)"))


def cmd_benchmark(cfg: dict, out: str | None, seed: int | None) -> int:
    report = run_benchmark(cfg, seed)
    out_dir = _out_dir(cfg, out)
    trials_dir = out_dir / "trials"
    trials_dir.mkdir(exist_ok=True)
    for i, trial_metrics in enumerate(report["per_trial"]):
        write_json(trials_dir / f"trial_{i:03d}.json", trial_metrics)
    write_json(out_dir / "benchmark_report.json", report)
    print_benchmark_table(report)
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="causalae",
        description="Causal autoencoder experiments: generate, train, evaluate, benchmark.",
    )
    sub = parser.add_subparsers(dest="command", required=True)
    for name, fn in (
        ("generate", cmd_generate),
        ("train", cmd_train),
        ("evaluate", cmd_evaluate),
        ("benchmark", cmd_benchmark),
    ):
        p = sub.add_parser(name)
        p.add_argument("--config", required=True, help="path to the JSON config file")
        p.add_argument("--seed", type=int, default=None, help="override the config seed")
        p.add_argument("--out", default=None, help="override the output directory")
        if name == "evaluate":
            p.add_argument("--model", required=True, help="path to a saved model file")
        p.set_defaults(fn=fn)
    return parser


def main(argv=None) -> int:
    logging.basicConfig(level=os.environ.get("CAUSALAE_LOG", "WARNING").upper())
    args = build_parser().parse_args(argv)
    try:
        cfg = load_config(args.config)
        if args.command == "evaluate":
            return args.fn(cfg, args.model, args.out, args.seed)
        return args.fn(cfg, args.out, args.seed)
    except ConfigurationError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except CausalAeError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_RUNTIME
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_RUNTIME


if __name__ == "__main__":
    sys.exit(main())
