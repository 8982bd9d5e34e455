"""Strict loaders for the forecasting CLI's exported JSON/CSV artifacts.

This package renders numbers produced elsewhere; it never recomputes model
math and never opens model checkpoints. Anything that does not match the
documented export schemas is rejected before plotting.
"""

from __future__ import annotations

import csv
import json
from dataclasses import dataclass
from datetime import datetime
from pathlib import Path

import numpy as np


class SchemaError(ValueError):
    """An input file does not match the exporter's schema."""


def _load_json(path) -> dict:
    path = Path(path)
    try:
        doc = json.loads(path.read_text())
    except OSError as exc:
        raise SchemaError(f"cannot read {path}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise SchemaError(f"{path} is not valid JSON: {exc}") from exc
    if not isinstance(doc, dict):
        raise SchemaError(f"{path} must hold a JSON object")
    if "format" in doc or "params" in doc:
        raise SchemaError(
            f"{path} looks like a model checkpoint, not an exported report; "
            "this tool only accepts exported JSON/CSV artifacts"
        )
    return doc


@dataclass
class AttentionDoc:
    cities: list[str]
    variables: list[str]
    # per stream name: averaged per-head alphas, scalar N x N / variable N x N x F
    streams: dict[str, list[np.ndarray]]

    def head_mean(self, stream: str) -> np.ndarray:
        heads = self.streams[stream]
        return np.mean(heads, axis=0)


def load_attention_report(path) -> AttentionDoc:
    doc = _load_json(path)
    missing = {"cities", "variables", "streams"} - set(doc)
    if missing:
        raise SchemaError(f"attention report missing key(s): {sorted(missing)}")
    cities = list(doc["cities"])
    variables = list(doc["variables"])
    n, f = len(cities), len(variables)
    if n < 2 or f < 1:
        raise SchemaError(f"implausible label lists: {n} cities, {f} variables")
    streams: dict[str, list[np.ndarray]] = {}
    for stream in doc["streams"]:
        if not {"name", "a_hat", "heads"} <= set(stream):
            raise SchemaError("each stream needs name, a_hat and heads")
        name = stream["name"]
        a_hat = np.asarray(stream["a_hat"], dtype=np.float64)
        if a_hat.shape != (n, n):
            raise SchemaError(f"{name} stream a_hat has shape {a_hat.shape}, expected ({n}, {n})")
        heads = []
        for head in stream["heads"]:
            alpha = np.asarray(head.get("alpha"), dtype=np.float64)
            dims = tuple(head.get("dims", ()))
            if alpha.shape != dims:
                raise SchemaError(
                    f"{name} stream head alpha shape {alpha.shape} disagrees with dims {dims}"
                )
            expected = (n, n) if name == "scalar" else (n, n, f)
            if alpha.shape != expected:
                raise SchemaError(
                    f"{name} stream alpha shape {alpha.shape} inconsistent with "
                    f"{n} cities / {f} variables"
                )
            heads.append(alpha)
        if not heads:
            raise SchemaError(f"{name} stream has no heads")
        streams[name] = heads
    if "variable" not in streams:
        raise SchemaError("attention report has no variable stream")
    return AttentionDoc(cities=cities, variables=variables, streams=streams)


@dataclass
class EvalDoc:
    horizon: int
    mae: float
    mse: float
    per_city_mae: dict[str, float]
    n: int


def load_eval_report(path) -> EvalDoc:
    doc = _load_json(path)
    expected = {"horizon", "mae", "mse", "per_city_mae", "n"}
    if set(doc) != expected:
        raise SchemaError(
            f"eval report keys {sorted(doc)} do not match expected {sorted(expected)}"
        )
    per_city = doc["per_city_mae"]
    if not isinstance(per_city, dict) or not per_city:
        raise SchemaError("per_city_mae must be a non-empty object")
    return EvalDoc(
        horizon=int(doc["horizon"]),
        mae=float(doc["mae"]),
        mse=float(doc["mse"]),
        per_city_mae={str(k): float(v) for k, v in per_city.items()},
        n=int(doc["n"]),
    )


@dataclass
class PredictionRow:
    timestamp: datetime
    city: str
    actual: float
    predicted: float


def load_predictions(path) -> list[PredictionRow]:
    path = Path(path)
    try:
        handle = open(path, newline="")
    except OSError as exc:
        raise SchemaError(f"cannot read {path}: {exc}") from exc
    rows = []
    with handle:
        reader = csv.reader(handle)
        header = next(reader, None)
        if header != ["timestamp", "city", "actual", "predicted"]:
            raise SchemaError(
                f"{path}:1: expected header timestamp,city,actual,predicted, got {header}"
            )
        for lineno, row in enumerate(reader, start=2):
            if not row:
                continue
            if len(row) != 4:
                raise SchemaError(f"{path}:{lineno}: expected 4 fields, got {len(row)}")
            try:
                rows.append(
                    PredictionRow(
                        timestamp=datetime.fromisoformat(row[0]),
                        city=row[1],
                        actual=float(row[2]),
                        predicted=float(row[3]),
                    )
                )
            except ValueError as exc:
                raise SchemaError(f"{path}:{lineno}: {exc}") from exc
    if not rows:
        raise SchemaError(f"{path} has no prediction rows")
    return rows
