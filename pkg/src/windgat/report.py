"""Capture batch-averaged attention weights and serialize them for plotting.

The exported JSON holds, per stream, the normalized adjacency and one
averaged alpha per head: N x N for the scalar stream, N x N x F for the
variable stream. Downstream plotting consumes only this file, never the
checkpoint.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path
from typing import Sequence

import numpy as np

from .data import WeatherInstance
from .errors import DataError
from .model import MultistreamGatModel
from .tensor import Tensor, no_grad

ROW_SUM_TOLERANCE = 1e-6


@dataclass
class HeadAttention:
    alpha: np.ndarray  # N x N (scalar stream) or N x N x F (variable stream)


@dataclass
class StreamAttention:
    name: str  # "scalar" or "variable"
    a_hat: np.ndarray  # N x N normalized adjacency
    heads: list[HeadAttention]


@dataclass
class AttentionReport:
    cities: tuple[str, ...]
    variables: tuple[str, ...]
    streams: list[StreamAttention]

    def __post_init__(self):
        for stream in self.streams:
            for head in stream.heads:
                # Averaging per-instance softmax maps keeps each slice's
                # source axis summing to one.
                sums = head.alpha.sum(axis=1)
                if not np.allclose(sums, 1.0, atol=ROW_SUM_TOLERANCE):
                    raise DataError(
                        f"{stream.name} stream attention rows sum to "
                        f"{sums.min()}..{sums.max()}, expected 1"
                    )


def collect_attention(
    model: MultistreamGatModel, instances: Sequence[WeatherInstance]
) -> AttentionReport:
    """Forward every instance and average the attention maps per head."""
    if not instances:
        raise DataError("cannot collect attention from an empty batch")
    scalar_sums: list[np.ndarray] | None = None
    var_sums: list[np.ndarray] | None = None
    a_hat_scalar = a_hat_var = None
    with no_grad():
        for inst in instances:
            _, capture = model.forward(Tensor(inst.x))
            if scalar_sums is None:
                scalar_sums = [a.copy() for a in capture.alpha_scalar]
                var_sums = [a.copy() for a in capture.alpha_var]
                a_hat_scalar = capture.a_hat_scalar
                a_hat_var = capture.a_hat_var
            else:
                for acc, alpha in zip(scalar_sums, capture.alpha_scalar):
                    acc += alpha
                for acc, alpha in zip(var_sums, capture.alpha_var):
                    acc += alpha
    count = float(len(instances))
    config = model.config
    cities = tuple(f"city{i}" for i in range(config.n_cities))
    return AttentionReport(
        cities=cities,
        variables=tuple(f"var{i}" for i in range(config.n_variables)),
        streams=[
            StreamAttention(
                name="scalar",
                a_hat=a_hat_scalar,
                heads=[HeadAttention(alpha=s / count) for s in scalar_sums],
            ),
            StreamAttention(
                name="variable",
                a_hat=a_hat_var,
                heads=[HeadAttention(alpha=s / count) for s in var_sums],
            ),
        ],
    )


def label_report(report: AttentionReport, cities, variables) -> AttentionReport:
    """Replace placeholder station/variable labels with dataset names."""
    n = len(report.streams[0].a_hat)
    if len(cities) != n:
        raise DataError(f"report has {n} cities, labels name {len(cities)}")
    f = report.streams[1].heads[0].alpha.shape[2]
    if len(variables) != f:
        raise DataError(f"report has {f} variables, labels name {len(variables)}")
    return AttentionReport(tuple(cities), tuple(variables), report.streams)


def report_to_dict(report: AttentionReport) -> dict:
    return {
        "cities": list(report.cities),
        "variables": list(report.variables),
        "streams": [
            {
                "name": stream.name,
                "a_hat": stream.a_hat.tolist(),
                "heads": [
                    {"alpha": head.alpha.tolist(), "dims": list(head.alpha.shape)}
                    for head in stream.heads
                ],
            }
            for stream in report.streams
        ],
    }


def report_from_dict(doc: dict) -> AttentionReport:
    try:
        return AttentionReport(
            cities=tuple(doc["cities"]),
            variables=tuple(doc["variables"]),
            streams=[
                StreamAttention(
                    name=s["name"],
                    a_hat=np.array(s["a_hat"], dtype=np.float64),
                    heads=[
                        HeadAttention(alpha=np.array(h["alpha"], dtype=np.float64))
                        for h in s["heads"]
                    ],
                )
                for s in doc["streams"]
            ],
        )
    except KeyError as exc:
        raise DataError(f"attention report missing key {exc}") from exc


def serialize_report(report: AttentionReport, path) -> None:
    """Write the report as JSON with deterministic key order and full precision."""
    doc = report_to_dict(report)
    try:
        with open(Path(path), "w") as handle:
            json.dump(doc, handle, sort_keys=True, separators=(",", ": "), indent=1)
            handle.write("\n")
    except OSError as exc:
        raise DataError(f"cannot write attention report to {path}: {exc}") from exc


def load_report(path) -> AttentionReport:
    try:
        with open(Path(path)) as handle:
            doc = json.load(handle)
    except OSError as exc:
        raise DataError(f"cannot read attention report from {path}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise DataError(f"attention report {path} is not valid JSON: {exc}") from exc
    return report_from_dict(doc)
