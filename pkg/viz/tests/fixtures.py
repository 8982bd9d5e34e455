"""Builders for schema-valid export artifacts used across the viz tests."""

import json

import numpy as np

NL_CITIES = ["Schiphol", "De Bilt", "Leeuwarden", "Eelde", "Rotterdam", "Eindhoven", "Maastricht"]
NL_VARIABLES = ["wind_speed", "wind_direction", "temperature", "dew_point", "air_pressure", "rain_amount"]


def softmax_rows(rng, shape):
    """Random positive tensor normalized over axis 1 (the source-city axis)."""
    raw = np.exp(rng.normal(size=shape))
    return raw / raw.sum(axis=1, keepdims=True)


def make_attention_doc(cities=None, variables=None, heads_scalar=2, heads_var=2, seed=0,
                       uniform=False):
    cities = cities if cities is not None else NL_CITIES
    variables = variables if variables is not None else NL_VARIABLES
    rng = np.random.default_rng(seed)
    n, f = len(cities), len(variables)

    def alpha(shape):
        if uniform:
            return np.full(shape, 1.0 / n)
        return softmax_rows(rng, shape)

    return {
        "cities": list(cities),
        "variables": list(variables),
        "streams": [
            {
                "name": "scalar",
                "a_hat": rng.uniform(size=(n, n)).tolist(),
                "heads": [
                    {"alpha": alpha((n, n)).tolist(), "dims": [n, n]}
                    for _ in range(heads_scalar)
                ],
            },
            {
                "name": "variable",
                "a_hat": rng.uniform(size=(n, n)).tolist(),
                "heads": [
                    {"alpha": alpha((n, n, f)).tolist(), "dims": [n, n, f]}
                    for _ in range(heads_var)
                ],
            },
        ],
    }


def write_json(path, doc):
    path.write_text(json.dumps(doc, indent=1))
    return path


def make_eval_doc(cities=None, horizon=2, seed=0):
    cities = cities if cities is not None else NL_CITIES
    rng = np.random.default_rng(seed)
    per_city = {city: round(float(v), 6) for city, v in zip(cities, rng.uniform(5, 12, len(cities)))}
    overall = float(np.mean(list(per_city.values())))
    return {
        "horizon": horizon,
        "mae": overall,
        "mse": overall**2 + 1.0,
        "per_city_mae": per_city,
        "n": 500,
    }


def write_predictions_csv(path, cities=None, hours=48, seed=0, equal=False):
    cities = cities if cities is not None else NL_CITIES
    rng = np.random.default_rng(seed)
    lines = ["timestamp,city,actual,predicted"]
    for k in range(hours):
        stamp = f"2019-01-{1 + k // 24:02d} {k % 24:02d}:00:00"
        for city in cities:
            actual = float(rng.uniform(0, 20))
            predicted = actual if equal else actual + float(rng.normal(0, 1.5))
            lines.append(f"{stamp},{city},{actual!r},{predicted!r}")
    path.write_text("\n".join(lines) + "\n")
    return path
