"""Command-line interface: train, evaluate, predict, export-attention.

All run settings live in one JSON config file for reproducibility; flags only
override the seed and output locations. Exit codes: 0 success, 1 usage or
config problem, 2 data problem, 3 numeric failure.
"""

from __future__ import annotations

import argparse
import csv
import json
import sys
from dataclasses import dataclass
from datetime import datetime
from pathlib import Path

import numpy as np

from .data import (
    DatasetProfile,
    NormalizationStats,
    WeatherInstance,
    apply_normalize,
    fit_normalize,
    get_profile,
    load_profile_dir,
    make_windows,
    split_by_date,
)
from .errors import ConfigError, DataError, NumericError, ShapeError, WindGatError
from .metrics import build_report
from .model import (
    ModelConfig,
    MultistreamGatModel,
    load_checkpoint,
    save_checkpoint,
)
from .report import collect_attention, label_report, serialize_report
from .tensor import Tensor, no_grad
from .training import TrainConfig, fit

MODEL_KEYS = {
    "timesteps",
    "t_prime",
    "heads_scalar",
    "heads_var",
    "per_step_width",
    "lstm_hidden",
}
TRAINING_KEYS = {
    "epochs",
    "batch_size",
    "learning_rate",
    "beta1",
    "beta2",
    "eps",
    "patience",
    "clip_norm",
}


@dataclass
class RunConfig:
    profile: DatasetProfile
    data_dir: Path
    horizon: int
    model_options: dict
    training_options: dict
    seed: int
    output_dir: Path

    def model_config(self) -> ModelConfig:
        return ModelConfig(
            n_cities=len(self.profile.cities),
            n_variables=len(self.profile.variables),
            horizon=self.horizon,
            seed=self.seed,
            **self.model_options,
        )

    def train_config(self) -> TrainConfig:
        return TrainConfig(seed=self.seed, **self.training_options)


def _reject_unknown(section: dict, allowed: set[str], where: str) -> None:
    unknown = set(section) - allowed
    if unknown:
        raise ConfigError(f"unknown key(s) in {where}: {sorted(unknown)}")


def load_run_config(path, seed_override=None, out_override=None) -> RunConfig:
    path = Path(path)
    try:
        doc = json.loads(path.read_text())
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise ConfigError(f"config {path} is not valid JSON: {exc}") from exc
    if not isinstance(doc, dict):
        raise ConfigError(f"config {path} must be a JSON object")
    _reject_unknown(doc, {"dataset", "model", "training", "seed", "output_dir"}, "config")
    dataset = doc.get("dataset")
    if not isinstance(dataset, dict):
        raise ConfigError("config needs a 'dataset' object")
    _reject_unknown(dataset, {"profile", "data_dir", "horizon"}, "dataset")
    for key in ("profile", "data_dir", "horizon"):
        if key not in dataset:
            raise ConfigError(f"dataset section missing {key!r}")
    profile = get_profile(dataset["profile"])
    horizon = dataset["horizon"]
    if not isinstance(horizon, int):
        raise ConfigError(f"horizon must be an integer, got {horizon!r}")
    profile.validate_horizon(horizon)
    data_dir = (path.parent / dataset["data_dir"]).resolve()
    if not data_dir.is_dir():
        raise ConfigError(f"data_dir {data_dir} is not a directory")
    model_options = doc.get("model", {})
    _reject_unknown(model_options, MODEL_KEYS, "model")
    training_options = doc.get("training", {})
    _reject_unknown(training_options, TRAINING_KEYS, "training")
    seed = doc.get("seed", 0)
    if seed_override is not None:
        seed = seed_override
    if not isinstance(seed, int):
        raise ConfigError(f"seed must be an integer, got {seed!r}")
    output_dir = Path(out_override) if out_override else path.parent / doc.get("output_dir", "out")
    return RunConfig(
        profile=profile,
        data_dir=data_dir,
        horizon=horizon,
        model_options=dict(model_options),
        training_options=dict(training_options),
        seed=seed,
        output_dir=Path(output_dir),
    )


def _prepare_splits(run: RunConfig):
    series = load_profile_dir(run.data_dir, run.profile)
    stats = fit_normalize(series, train_end=run.profile.test_start)
    normed = apply_normalize(series, stats)
    model_config = run.model_config()
    windows = make_windows(
        normed, model_config.timesteps, run.horizon, run.profile.wind_speed_index
    )
    train, val, test = split_by_date(windows, run.profile)
    return stats, (train, val, test), model_config


def _stats_path(ckpt_path) -> Path:
    return Path(ckpt_path).parent / "norm_stats.json"


def _load_stats(ckpt_path, stats_override=None) -> NormalizationStats:
    stats_path = Path(stats_override) if stats_override else _stats_path(ckpt_path)
    try:
        doc = json.loads(stats_path.read_text())
    except OSError as exc:
        raise DataError(
            f"normalization stats not found at {stats_path} "
            "(expected next to the checkpoint; see --stats)"
        ) from exc
    return NormalizationStats.from_dict(doc)


def _check_checkpoint_matches(meta: dict | None, run: RunConfig) -> None:
    if not meta:
        raise ConfigError("checkpoint carries no dataset metadata; cannot match profile")
    if meta.get("profile") != run.profile.name:
        raise ConfigError(
            f"checkpoint trained on profile {meta.get('profile')!r} "
            f"but config requests {run.profile.name!r}"
        )
    if meta.get("horizon") != run.horizon:
        raise ConfigError(
            f"checkpoint trained for horizon {meta.get('horizon')} "
            f"but config requests {run.horizon}"
        )


def cmd_train(args) -> int:
    run = load_run_config(args.config, args.seed, args.out)
    stats, (train, val, _), model_config = _prepare_splits(run)
    run.output_dir.mkdir(parents=True, exist_ok=True)
    model = MultistreamGatModel(model_config)
    result = fit(
        model,
        train,
        val,
        run.train_config(),
        log_path=run.output_dir / "train_log.jsonl",
    )
    meta = {"profile": run.profile.name, "horizon": run.horizon}
    save_checkpoint(model, run.output_dir / "model.ckpt", dataset_meta=meta)
    with open(run.output_dir / "norm_stats.json", "w") as handle:
        json.dump(stats.to_dict(), handle, sort_keys=True, indent=1)
        handle.write("\n")
    if result.diverged:
        raise NumericError(
            f"training diverged after epoch {result.epochs_run}; "
            f"best checkpoint (epoch {result.best_epoch}) retained in {run.output_dir}"
        )
    print(
        f"trained {result.epochs_run} epochs; best val MSE "
        f"{result.best_val_mse:.6f} at epoch {result.best_epoch}; "
        f"artifacts in {run.output_dir}"
    )
    return 0


def _predict_instances(model, instances) -> np.ndarray:
    rows = []
    with no_grad():
        for inst in instances:
            pred, _ = model.forward(Tensor(inst.x))
            rows.append(pred.data.copy())
    return np.stack(rows, axis=0)


def cmd_evaluate(args) -> int:
    run = load_run_config(args.config, None, args.out)
    model, meta = load_checkpoint(args.ckpt)
    _check_checkpoint_matches(meta, run)
    expected_cities = len(run.profile.cities)
    if model.config.n_cities != expected_cities:
        raise ConfigError(
            f"checkpoint has {model.config.n_cities} cities, profile "
            f"{run.profile.name} has {expected_cities}"
        )
    stats = _load_stats(args.ckpt, args.stats)
    series = load_profile_dir(run.data_dir, run.profile)
    normed = apply_normalize(series, stats)
    windows = make_windows(
        normed, model.config.timesteps, run.horizon, run.profile.wind_speed_index
    )
    _, _, test = split_by_date(windows, run.profile)
    wind = run.profile.wind_speed_index
    pred_norm = _predict_instances(model, test)
    actual_norm = np.stack([inst.y for inst in test], axis=0)
    pred_raw = stats.denormalize_wind(pred_norm, wind)
    actual_raw = stats.denormalize_wind(actual_norm, wind)
    report = build_report(actual_raw, pred_raw, run.profile.cities, run.horizon)
    payload = json.dumps(report.to_dict(), sort_keys=True, indent=1)
    print(payload)
    run.output_dir.mkdir(parents=True, exist_ok=True)
    (run.output_dir / "eval_report.json").write_text(payload + "\n")
    with open(run.output_dir / "predictions.csv", "w", newline="") as handle:
        writer = csv.writer(handle)
        writer.writerow(["timestamp", "city", "actual", "predicted"])
        for k, inst in enumerate(test):
            for j, city in enumerate(run.profile.cities):
                writer.writerow(
                    [
                        inst.target_time.isoformat(sep=" "),
                        city,
                        repr(float(actual_raw[k, j])),
                        repr(float(pred_raw[k, j])),
                    ]
                )
    return 0


def load_window_csv(path, profile: DatasetProfile, timesteps: int) -> np.ndarray:
    """Parse a prediction window: header ``timestamp,city,<vars>``, T rows per city."""
    expected_header = ["timestamp", "city", *profile.variables]
    per_city: dict[str, list[tuple[datetime, list[float]]]] = {c: [] for c in profile.cities}
    try:
        handle = open(Path(path), newline="")
    except OSError as exc:
        raise DataError(f"cannot open window file {path}: {exc}") from exc
    with handle:
        reader = csv.reader(handle)
        header = next(reader, None)
        if header != expected_header:
            raise DataError(f"{path}:1: wrong column set {header}, expected {expected_header}")
        for lineno, row in enumerate(reader, start=2):
            if not row:
                continue
            if len(row) != len(expected_header):
                raise DataError(f"{path}:{lineno}: expected {len(expected_header)} fields")
            try:
                ts = datetime.fromisoformat(row[0])
                values = [float(v) for v in row[2:]]
            except ValueError as exc:
                raise DataError(f"{path}:{lineno}: {exc}") from exc
            city = row[1]
            if city not in per_city:
                raise DataError(f"{path}:{lineno}: unknown city {city!r} for profile {profile.name}")
            per_city[city].append((ts, values))
    reference = None
    x = np.empty((len(profile.cities), timesteps, len(profile.variables)))
    for i, city in enumerate(profile.cities):
        rows = sorted(per_city[city], key=lambda pair: pair[0])
        if len(rows) != timesteps:
            raise DataError(f"expected {timesteps} timesteps for {city}, got {len(rows)}")
        stamps = [ts for ts, _ in rows]
        if reference is None:
            reference = stamps
        elif stamps != reference:
            raise DataError(f"{city} timestamps do not match the other cities")
        x[i] = np.array([values for _, values in rows])
    return x


def cmd_predict(args) -> int:
    model, meta = load_checkpoint(args.ckpt)
    if not meta or "profile" not in meta:
        raise ConfigError("checkpoint carries no dataset metadata; cannot infer profile")
    profile = get_profile(meta["profile"])
    stats = _load_stats(args.ckpt, args.stats)
    x_raw = load_window_csv(args.window, profile, model.config.timesteps)
    x_norm = stats.normalize_window(x_raw)
    with no_grad():
        pred, _ = model.forward(Tensor(x_norm))
    raw = stats.denormalize_wind(pred.data, profile.wind_speed_index)
    for city, value in zip(profile.cities, raw):
        print(f"{city}: {value:.4f}")
    return 0


def cmd_export_attention(args) -> int:
    run = load_run_config(args.config)
    model, meta = load_checkpoint(args.ckpt)
    _check_checkpoint_matches(meta, run)
    stats = _load_stats(args.ckpt, args.stats)
    series = load_profile_dir(run.data_dir, run.profile)
    normed = apply_normalize(series, stats)
    windows = make_windows(
        normed, model.config.timesteps, run.horizon, run.profile.wind_speed_index
    )
    _, _, test = split_by_date(windows, run.profile)
    if args.limit is not None:
        if args.limit < 1:
            raise ConfigError(f"--limit must be >= 1, got {args.limit}")
        test = test[: args.limit]
    report = collect_attention(model, test)
    report = label_report(report, run.profile.cities, run.profile.variables)
    serialize_report(report, args.out)
    print(f"wrote attention report for {len(test)} instances to {args.out}")
    return 0


class _Parser(argparse.ArgumentParser):
    """argparse defaults to exit code 2; usage problems must exit 1 here."""

    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(1, f"{self.prog}: error: {message}\n")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="windgat", description="Multi-station wind speed forecasting")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    train = sub.add_parser("train", help="train a model from a JSON run config")
    train.add_argument("--config", required=True)
    train.add_argument("--seed", type=int, default=None)
    train.add_argument("--out", default=None, help="output directory override")
    train.set_defaults(handler=cmd_train)

    evaluate = sub.add_parser("evaluate", help="score a checkpoint on the test split")
    evaluate.add_argument("--config", required=True)
    evaluate.add_argument("--ckpt", required=True)
    evaluate.add_argument("--stats", default=None, help="normalization stats JSON")
    evaluate.add_argument("--out", default=None, help="output directory override")
    evaluate.set_defaults(handler=cmd_evaluate)

    predict = sub.add_parser("predict", help="predict wind speed from one window CSV")
    predict.add_argument("--ckpt", required=True)
    predict.add_argument("--window", required=True)
    predict.add_argument("--stats", default=None, help="normalization stats JSON")
    predict.set_defaults(handler=cmd_predict)

    export = sub.add_parser("export-attention", help="export averaged attention JSON")
    export.add_argument("--config", required=True)
    export.add_argument("--ckpt", required=True)
    export.add_argument("--out", required=True, help="attention JSON output path")
    export.add_argument("--stats", default=None, help="normalization stats JSON")
    export.add_argument("--limit", type=int, default=None, help="use only the first N test instances")
    export.set_defaults(handler=cmd_export_attention)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        return args.handler(args)
    except NumericError as exc:
        print(f"windgat: numeric failure: {exc}", file=sys.stderr)
        return 3
    except DataError as exc:
        print(f"windgat: data error: {exc}", file=sys.stderr)
        return 2
    except (ConfigError, ShapeError) as exc:
        print(f"windgat: config error: {exc}", file=sys.stderr)
        return 1
    except WindGatError as exc:  # any future subtype defaults to config-level
        print(f"windgat: error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
