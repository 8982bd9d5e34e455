"""Weather data ingestion, normalization, windowing and date-based splits.

Input format: one CSV per station with header ``timestamp,<var1>,...,<varF>``,
ISO-8601 timestamps on a gap-free hourly grid, identical range across
stations. Gaps are fatal, never imputed.

Canonical array layout is stations x timesteps x variables per instance.
Min-max statistics are fit on the training period only and are never
clamped: test-period values outside the fitted range stay outside [0, 1].
"""

from __future__ import annotations

import csv
from dataclasses import dataclass
from datetime import datetime, timedelta
from pathlib import Path
from typing import Mapping, Sequence

import numpy as np

from .errors import ConfigError, DataError

HOUR = timedelta(hours=1)


@dataclass(frozen=True)
class DatasetProfile:
    name: str
    cities: tuple[str, ...]
    variables: tuple[str, ...]
    wind_speed_index: int
    horizons: tuple[int, ...]
    test_start: datetime
    test_end: datetime | None  # exclusive; None = open-ended

    def validate_horizon(self, horizon: int) -> None:
        if horizon not in self.horizons:
            raise ConfigError(
                f"horizon not in {{{','.join(str(h) for h in self.horizons)}}}: got {horizon}"
            )


PROFILES: dict[str, DatasetProfile] = {
    "NL": DatasetProfile(
        name="NL",
        cities=("Schiphol", "De Bilt", "Leeuwarden", "Eelde", "Rotterdam", "Eindhoven", "Maastricht"),
        variables=("wind_speed", "wind_direction", "temperature", "dew_point", "air_pressure", "rain_amount"),
        wind_speed_index=0,
        horizons=(2, 4, 6, 8, 10),
        test_start=datetime(2019, 1, 1),
        test_end=None,
    ),
    "DK": DatasetProfile(
        name="DK",
        cities=("Aalborg", "Aarhus", "Esbjerg", "Odense", "Roskilde"),
        variables=("temperature", "pressure", "wind_speed", "wind_direction"),
        wind_speed_index=2,
        horizons=(6, 12, 18, 24),
        test_start=datetime(2010, 1, 1),
        test_end=datetime(2011, 1, 1),
    ),
}


def get_profile(name: str) -> DatasetProfile:
    try:
        return PROFILES[name]
    except KeyError:
        raise ConfigError(f"unknown dataset profile {name!r}; choose from {sorted(PROFILES)}")


def city_filename(city: str) -> str:
    return city.lower().replace(" ", "_") + ".csv"


@dataclass
class WeatherSeries:
    """Aligned multi-station hourly series, values in raw physical units."""

    cities: tuple[str, ...]
    variables: tuple[str, ...]
    timestamps: list[datetime]  # strictly increasing, gap-free hourly
    values: np.ndarray  # L x N x F

    def __post_init__(self):
        L = len(self.timestamps)
        if self.values.shape != (L, len(self.cities), len(self.variables)):
            raise DataError(
                f"series values {self.values.shape} inconsistent with "
                f"{L} timestamps, {len(self.cities)} cities, {len(self.variables)} variables"
            )


def _parse_city_csv(city: str, path: Path, variables: Sequence[str]) -> tuple[list[datetime], np.ndarray]:
    expected_header = ["timestamp", *variables]
    timestamps: list[datetime] = []
    rows: list[list[float]] = []
    try:
        handle = open(path, newline="")
    except OSError as exc:
        raise DataError(f"{city}: cannot open {path}: {exc}") from exc
    with handle:
        reader = csv.reader(handle)
        header = next(reader, None)
        if header != expected_header:
            raise DataError(
                f"{path}:1: wrong column set {header}, expected {expected_header}"
            )
        for lineno, row in enumerate(reader, start=2):
            if not row:
                continue
            if len(row) != len(expected_header):
                raise DataError(f"{path}:{lineno}: expected {len(expected_header)} fields, got {len(row)}")
            try:
                ts = datetime.fromisoformat(row[0])
            except ValueError as exc:
                raise DataError(f"{path}:{lineno}: unparseable timestamp {row[0]!r}") from exc
            try:
                values = [float(v) for v in row[1:]]
            except ValueError as exc:
                raise DataError(f"{path}:{lineno}: unparseable number: {exc}") from exc
            if timestamps:
                expected_ts = timestamps[-1] + HOUR
                if ts != expected_ts:
                    raise DataError(
                        f"{path}:{lineno}: {city} is missing hour {expected_ts.isoformat()} "
                        f"(found {ts.isoformat()})"
                    )
            timestamps.append(ts)
            rows.append(values)
    if not rows:
        raise DataError(f"{path}: no data rows")
    return timestamps, np.array(rows, dtype=np.float64)


def load_csv(paths: Mapping[str, Path | str], profile: DatasetProfile) -> WeatherSeries:
    """Load one CSV per station and align them into an L x N x F series."""
    missing = set(profile.cities) - set(paths)
    if missing:
        raise DataError(f"no file given for cities: {sorted(missing)}")
    timestamps = None
    per_city = []
    for city in profile.cities:
        ts, values = _parse_city_csv(city, Path(paths[city]), profile.variables)
        if timestamps is None:
            timestamps = ts
            first_city = city
        elif ts[0] != timestamps[0] or len(ts) != len(timestamps):
            raise DataError(
                f"{city} covers {ts[0].isoformat()}..{ts[-1].isoformat()} "
                f"but {first_city} covers {timestamps[0].isoformat()}..{timestamps[-1].isoformat()}"
            )
        per_city.append(values)
    return WeatherSeries(
        cities=profile.cities,
        variables=profile.variables,
        timestamps=timestamps,
        values=np.stack(per_city, axis=1),
    )


def load_profile_dir(data_dir: Path | str, profile: DatasetProfile) -> WeatherSeries:
    """Load ``<data_dir>/<city>.csv`` (lowercased, underscores) for every station."""
    data_dir = Path(data_dir)
    return load_csv({city: data_dir / city_filename(city) for city in profile.cities}, profile)


# -- normalization ---------------------------------------------------------------


@dataclass
class NormalizationStats:
    """Per (station, variable) min/max fitted on the training period."""

    cities: tuple[str, ...]
    variables: tuple[str, ...]
    vmin: np.ndarray  # N x F
    vmax: np.ndarray  # N x F

    def normalize(self, values: np.ndarray) -> np.ndarray:
        """Scale a time-major L x N x F array."""
        return (values - self.vmin) / (self.vmax - self.vmin)

    def normalize_window(self, window: np.ndarray) -> np.ndarray:
        """Scale a station-major N x T x F model input window."""
        span = (self.vmax - self.vmin)[:, None, :]
        return (window - self.vmin[:, None, :]) / span

    def denormalize_wind(self, normalized: np.ndarray, wind_index: int) -> np.ndarray:
        """Map normalized wind-speed predictions (... x N) back to raw units."""
        lo = self.vmin[:, wind_index]
        hi = self.vmax[:, wind_index]
        return normalized * (hi - lo) + lo

    def to_dict(self) -> dict:
        return {
            "cities": list(self.cities),
            "variables": list(self.variables),
            "min": self.vmin.tolist(),
            "max": self.vmax.tolist(),
        }

    @classmethod
    def from_dict(cls, doc: dict) -> "NormalizationStats":
        try:
            return cls(
                cities=tuple(doc["cities"]),
                variables=tuple(doc["variables"]),
                vmin=np.array(doc["min"], dtype=np.float64),
                vmax=np.array(doc["max"], dtype=np.float64),
            )
        except KeyError as exc:
            raise ConfigError(f"normalization stats missing key {exc}") from exc


def fit_normalize(series: WeatherSeries, train_end: datetime | None = None) -> NormalizationStats:
    """Fit per-channel min/max on rows strictly before ``train_end``."""
    if train_end is None:
        rows = series.values
    else:
        count = sum(1 for ts in series.timestamps if ts < train_end)
        rows = series.values[:count]
    if rows.shape[0] == 0:
        raise DataError("empty training range for normalization")
    vmin = rows.min(axis=0)
    vmax = rows.max(axis=0)
    flat = np.argwhere(vmax <= vmin)
    if flat.size:
        n, f = flat[0]
        raise DataError(
            f"degenerate channel: {series.cities[n]}/{series.variables[f]} is constant "
            "over the training period"
        )
    return NormalizationStats(series.cities, series.variables, vmin, vmax)


def apply_normalize(series: WeatherSeries, stats: NormalizationStats) -> WeatherSeries:
    """Scale every channel; values outside the fitted range are kept, never clamped."""
    if stats.cities != series.cities or stats.variables != series.variables:
        raise DataError("normalization stats do not match series layout")
    return WeatherSeries(
        cities=series.cities,
        variables=series.variables,
        timestamps=series.timestamps,
        values=stats.normalize(series.values),
    )


# -- windowing and splits ----------------------------------------------------------


@dataclass(eq=False)  # identity semantics; fields hold numpy arrays
class WeatherInstance:
    """One training sample: input window plus wind-speed targets at the horizon."""

    x: np.ndarray  # N x T x F, normalized
    y: np.ndarray  # N, normalized wind speed at window end + horizon
    start_time: datetime
    target_time: datetime


def make_windows(
    series: WeatherSeries, timesteps: int, horizon: int, wind_speed_index: int
) -> list[WeatherInstance]:
    """Stride-1 sliding windows; yields L - T - h + 1 instances."""
    L = series.values.shape[0]
    count = L - timesteps - horizon + 1
    if count < 1:
        raise DataError(
            f"series of length {L} too short for {timesteps} timesteps + horizon {horizon}"
        )
    instances = []
    for t0 in range(count):
        target_idx = t0 + timesteps - 1 + horizon
        instances.append(
            WeatherInstance(
                x=series.values[t0 : t0 + timesteps].transpose(1, 0, 2).copy(),
                y=series.values[target_idx, :, wind_speed_index].copy(),
                start_time=series.timestamps[t0],
                target_time=series.timestamps[target_idx],
            )
        )
    return instances


def split_by_date(
    instances: Sequence[WeatherInstance], profile: DatasetProfile
) -> tuple[list[WeatherInstance], list[WeatherInstance], list[WeatherInstance]]:
    """Split into (train, val, test) on the profile's test boundary.

    Test keeps instances lying entirely inside the test period (window start
    at or after the boundary, target before the period end). Instances whose
    window straddles the boundary are dropped so nothing leaks. The remaining
    pre-boundary instances split chronologically 90/10 into train/val.
    """
    boundary = profile.test_start
    pre = [i for i in instances if i.target_time < boundary]
    test = [
        i
        for i in instances
        if i.start_time >= boundary
        and (profile.test_end is None or i.target_time < profile.test_end)
    ]
    n_train = int(len(pre) * 0.9)
    train, val = list(pre[:n_train]), list(pre[n_train:])
    if not train or not val or not test:
        raise DataError(
            f"empty split: {len(train)} train / {len(val)} val / {len(test)} test "
            f"around boundary {boundary.isoformat()}"
        )
    return train, val, test
