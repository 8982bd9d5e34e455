"""Plotting for windgat CLI exports: attention heatmaps, MAE bars, forecast curves."""

from .plots import plot_attention, plot_city_bars, plot_predictions
from .schema import SchemaError, load_attention_report, load_eval_report, load_predictions

__all__ = [
    "SchemaError",
    "load_attention_report",
    "load_eval_report",
    "load_predictions",
    "plot_attention",
    "plot_city_bars",
    "plot_predictions",
]
