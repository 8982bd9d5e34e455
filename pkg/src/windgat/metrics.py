"""MAE/MSE evaluation in raw physical units, overall and per city."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import DataError, ShapeError


def _paired(y, y_hat) -> tuple[np.ndarray, np.ndarray]:
    y = np.asarray(y, dtype=np.float64)
    y_hat = np.asarray(y_hat, dtype=np.float64)
    if y.shape != y_hat.shape:
        raise ShapeError(f"metric shapes differ: {y.shape} vs {y_hat.shape}")
    if y.size == 0:
        raise DataError("cannot compute metrics on empty input")
    return y, y_hat


def mae(y, y_hat) -> float:
    """Mean absolute error over all (instance, city) pairs."""
    y, y_hat = _paired(y, y_hat)
    return float(np.mean(np.abs(y - y_hat)))


def mse(y, y_hat) -> float:
    """Mean squared error over all (instance, city) pairs."""
    y, y_hat = _paired(y, y_hat)
    return float(np.mean((y - y_hat) ** 2))


def per_city_mae(y, y_hat) -> np.ndarray:
    """MAE restricted to each city's column of instances x cities arrays."""
    y, y_hat = _paired(y, y_hat)
    if y.ndim != 2:
        raise ShapeError(f"per-city MAE needs instances x cities arrays, got {y.shape}")
    return np.mean(np.abs(y - y_hat), axis=0)


@dataclass(frozen=True)
class EvalReport:
    """One horizon's evaluation: overall errors plus the per-city breakdown."""

    horizon: int
    mae: float
    mse: float
    city_mae: dict[str, float]
    n: int

    def __post_init__(self):
        if self.n <= 0:
            raise DataError("evaluation report needs at least one instance")
        if self.mse < 0 or self.mae < 0:
            raise DataError("negative error metric")
        if self.mae > math.sqrt(self.mse) + 1e-12:
            raise DataError(
                f"inconsistent metrics: MAE {self.mae} exceeds sqrt(MSE) {math.sqrt(self.mse)}"
            )

    def to_dict(self) -> dict:
        return {
            "horizon": self.horizon,
            "mae": self.mae,
            "mse": self.mse,
            "per_city_mae": dict(self.city_mae),
            "n": self.n,
        }


def build_report(y, y_hat, cities, horizon: int) -> EvalReport:
    """Score denormalized targets/predictions of shape instances x cities."""
    y, y_hat = _paired(y, y_hat)
    if y.ndim != 2 or y.shape[1] != len(cities):
        raise ShapeError(
            f"expected instances x {len(cities)} arrays, got {y.shape}"
        )
    city_values = per_city_mae(y, y_hat)
    return EvalReport(
        horizon=horizon,
        mae=mae(y, y_hat),
        mse=mse(y, y_hat),
        city_mae={city: float(v) for city, v in zip(cities, city_values)},
        n=y.shape[0],
    )
