"""Figure rendering. Every function returns the plotted numbers so callers
and tests can verify them against the source JSON without reading pixels."""

from __future__ import annotations

from datetime import datetime
from pathlib import Path

import matplotlib

matplotlib.use("Agg")

import matplotlib.dates as mdates
import matplotlib.pyplot as plt
import numpy as np

from .schema import AttentionDoc, EvalDoc, PredictionRow, SchemaError


def plot_attention(report: AttentionDoc, target_city: str, out_path) -> np.ndarray:
    """Heatmap of head-averaged variable-stream attention for one target city.

    Rows are weather variables, columns are source cities. Returns the
    variables x cities matrix that was drawn and prints each row's sum as a
    sanity check (softmax rows stay 1 under head and batch averaging).
    """
    if target_city not in report.cities:
        raise SchemaError(
            f"unknown city {target_city!r}; report covers {report.cities}"
        )
    i = report.cities.index(target_city)
    mean_alpha = report.head_mean("variable")  # N x N x F
    matrix = mean_alpha[i].T  # F x N: variable rows, source-city columns
    for p, variable in enumerate(report.variables):
        print(f"{target_city} / {variable}: row sum {matrix[p].sum():.9f}")

    fig, ax = plt.subplots(figsize=(1.4 * len(report.cities), 1.0 * len(report.variables) + 1.5))
    image = ax.imshow(matrix, aspect="auto", cmap="viridis")
    ax.set_xticks(range(len(report.cities)), report.cities, rotation=30, ha="right")
    ax.set_yticks(range(len(report.variables)), report.variables)
    ax.set_title(f"Attention toward {target_city} (head mean)")
    fig.colorbar(image, ax=ax, label="attention weight")
    fig.tight_layout()
    fig.savefig(Path(out_path))
    plt.close(fig)
    return matrix


def plot_city_bars(reports: list[EvalDoc], out_path, average: bool = False) -> np.ndarray:
    """Per-city MAE bars: one bar per report within each city group.

    With ``average=True`` the groups collapse to a single horizon-averaged
    bar per city. Returns the matrix of drawn heights (reports x cities, or
    1 x cities when averaged) taken verbatim from the reports.
    """
    if not reports:
        raise SchemaError("need at least one eval report")
    cities = list(reports[0].per_city_mae)
    for doc in reports[1:]:
        if list(doc.per_city_mae) != cities:
            raise SchemaError(
                f"inconsistent city lists: {cities} vs {list(doc.per_city_mae)}"
            )
    heights = np.array([[doc.per_city_mae[c] for c in cities] for doc in reports])
    labels = [f"{doc.horizon}h" for doc in reports]
    if average:
        heights = heights.mean(axis=0, keepdims=True)
        labels = ["mean over horizons"]

    fig, ax = plt.subplots(figsize=(1.2 * len(cities) + 2, 4.5))
    positions = np.arange(len(cities), dtype=np.float64)
    width = 0.8 / len(heights)
    for k, row in enumerate(heights):
        offset = (k - (len(heights) - 1) / 2) * width
        ax.bar(positions + offset, row, width=width, label=labels[k])
    ax.set_xticks(positions, cities, rotation=30, ha="right")
    ax.set_ylabel("MAE")
    ax.set_title("Per-city MAE")
    ax.legend()
    fig.tight_layout()
    fig.savefig(Path(out_path))
    plt.close(fig)
    return heights


def plot_predictions(
    rows: list[PredictionRow],
    city: str,
    span: tuple[datetime, datetime],
    out_path,
) -> list[PredictionRow]:
    """Overlay actual and predicted wind speed for one city over a time span.

    The span is inclusive on both ends. Returns the rows that were plotted.
    """
    cities = {row.city for row in rows}
    if city not in cities:
        raise SchemaError(f"unknown city {city!r}; dump covers {sorted(cities)}")
    start, end = span
    if end < start:
        raise SchemaError(f"span end {end} precedes start {start}")
    selected = [
        row for row in rows if row.city == city and start <= row.timestamp <= end
    ]
    if not selected:
        raise SchemaError(f"no rows for {city} between {start} and {end}")
    selected.sort(key=lambda row: row.timestamp)

    stamps = [row.timestamp for row in selected]
    fig, ax = plt.subplots(figsize=(9, 4))
    ax.plot(stamps, [row.actual for row in selected], label="actual", linewidth=1.2)
    ax.plot(
        stamps,
        [row.predicted for row in selected],
        label="predicted",
        linewidth=1.2,
        linestyle="--",
    )
    ax.set_title(f"Wind speed, {city}")
    ax.set_ylabel("wind speed")
    ax.xaxis.set_major_formatter(mdates.DateFormatter("%m-%d %H:%M"))
    fig.autofmt_xdate()
    ax.legend()
    fig.tight_layout()
    fig.savefig(Path(out_path))
    plt.close(fig)
    return selected
