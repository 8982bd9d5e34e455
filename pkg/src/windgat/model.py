"""Full forecasting model: two attention streams merged into an LSTM.

Layout per forward pass, for N stations, T timesteps, F variables:

* stream one flattens each station window to a vector, runs the classical
  attention heads, then blends stations with its own learned graph;
* stream two keeps the (T x F) structure, runs the per-variable attention
  heads, then blends stations with a second learned graph;
* both stream outputs are reshaped time-major and concatenated along the
  feature axis, fed through a single LSTM, and an affine head maps the
  final hidden state to one wind-speed value per station.

Stream one's per-station output width must equal transformed-time x
per-step width so it can be given a time axis for the merge.
"""

from __future__ import annotations

import dataclasses
import json
from dataclasses import dataclass, field

import numpy as np

from . import tensor as T
from .adjacency import LearnableAdjacency, mix_nodes, mixing_matrix, normalize_adjacency
from .attention import ScalarGatHead, VariableGatHead, multi_head
from .errors import ConfigError, ShapeError
from .initializers import glorot_uniform
from .lstm import GATES, LstmLayer, lstm_forward
from .tensor import Tensor

CHECKPOINT_FORMAT = "windgat-ckpt-v1"


@dataclass(frozen=True)
class ModelConfig:
    """Hyperparameters; everything beyond N/T/F defaults to sane values."""

    n_cities: int
    n_variables: int
    horizon: int
    timesteps: int = 30
    t_prime: int = 10
    heads_scalar: int = 2
    heads_var: int = 2
    per_step_width: int = 4  # stream-one width per transformed timestep
    lstm_hidden: int = 128
    seed: int = 0

    def __post_init__(self):
        positive = {
            "n_cities": self.n_cities,
            "n_variables": self.n_variables,
            "horizon": self.horizon,
            "timesteps": self.timesteps,
            "t_prime": self.t_prime,
            "heads_scalar": self.heads_scalar,
            "heads_var": self.heads_var,
            "per_step_width": self.per_step_width,
            "lstm_hidden": self.lstm_hidden,
        }
        for name, value in positive.items():
            if not isinstance(value, int) or value < 1:
                raise ConfigError(f"{name} must be a positive integer, got {value!r}")
        if self.n_cities < 2:
            raise ConfigError("need at least 2 cities to form a graph")

    @property
    def scalar_width(self) -> int:
        """Stream-one head output width; t_prime * per_step_width by construction."""
        return self.t_prime * self.per_step_width

    @property
    def lstm_input_width(self) -> int:
        return self.n_cities * (
            self.heads_scalar * self.per_step_width + self.heads_var * self.n_variables
        )


@dataclass
class AttentionCapture:
    """Attention state of one forward pass (detached numpy copies)."""

    a_hat_scalar: np.ndarray
    a_hat_var: np.ndarray
    alpha_scalar: list = field(default_factory=list)  # per head, N x N
    alpha_var: list = field(default_factory=list)  # per head, N x N x F


class MultistreamGatModel:
    def __init__(self, config: ModelConfig):
        self.config = config
        rng = np.random.default_rng(config.seed)
        c = config
        self.adjacency_scalar = LearnableAdjacency(c.n_cities, rng)
        self.adjacency_var = LearnableAdjacency(c.n_cities, rng)
        flat_features = c.timesteps * c.n_variables
        self.scalar_heads = [
            ScalarGatHead(flat_features, c.scalar_width, rng) for _ in range(c.heads_scalar)
        ]
        self.variable_heads = [
            VariableGatHead(c.timesteps, c.t_prime, rng) for _ in range(c.heads_var)
        ]
        self.lstm = LstmLayer(c.lstm_input_width, c.lstm_hidden, rng)
        self.out_weight = Tensor(glorot_uniform(rng, (c.n_cities, c.lstm_hidden)), requires_grad=True)
        self.out_bias = Tensor(np.zeros(c.n_cities), requires_grad=True)

    # -- parameter registry ---------------------------------------------------

    def parameter_items(self) -> list[tuple[str, Tensor]]:
        """Every trainable tensor exactly once, in a stable documented order:
        adjacencies, scalar heads, variable heads, LSTM gates, output head."""
        items = [
            ("adjacency_scalar", self.adjacency_scalar.matrix),
            ("adjacency_var", self.adjacency_var.matrix),
        ]
        for k, head in enumerate(self.scalar_heads):
            items += [(f"scalar_head.{k}.w", head.w), (f"scalar_head.{k}.a", head.a)]
        for k, head in enumerate(self.variable_heads):
            items += [(f"variable_head.{k}.w", head.w), (f"variable_head.{k}.a", head.a)]
        for gate in GATES:
            items.append((f"lstm.w.{gate}", self.lstm.w[gate]))
        for gate in GATES:
            items.append((f"lstm.u.{gate}", self.lstm.u[gate]))
        for gate in GATES:
            items.append((f"lstm.b.{gate}", self.lstm.b[gate]))
        items += [("out.weight", self.out_weight), ("out.bias", self.out_bias)]
        return items

    def parameters(self) -> list[Tensor]:
        return [t for _, t in self.parameter_items()]

    # -- forward ----------------------------------------------------------------

    def forward(self, x: Tensor) -> tuple[Tensor, AttentionCapture]:
        """Predict one normalized wind speed per station from one window."""
        c = self.config
        n, t, f = c.n_cities, c.timesteps, c.n_variables
        if x.shape != (n, t, f):
            raise ShapeError(f"expected input ({n}, {t}, {f}), got {x.shape}")

        capture = AttentionCapture(
            a_hat_scalar=np.empty(0), a_hat_var=np.empty(0)
        )

        # stream one: flattened features, scalar attention
        x_flat = x.reshape((n, t * f))
        scalar_out = multi_head(self.scalar_heads, x_flat, collect_alpha=capture.alpha_scalar)
        a_hat_s = normalize_adjacency(self.adjacency_scalar)
        capture.a_hat_scalar = a_hat_s.data.copy()
        mixed_s = mix_nodes(mixing_matrix(a_hat_s), scalar_out)
        stream_one = (
            mixed_s.reshape((n, c.heads_scalar, c.t_prime, c.per_step_width))
            .transpose((2, 0, 1, 3))
            .reshape((c.t_prime, n * c.heads_scalar * c.per_step_width))
        )

        # stream two: matrix features, per-variable attention
        var_out = multi_head(self.variable_heads, x, collect_alpha=capture.alpha_var)
        a_hat_v = normalize_adjacency(self.adjacency_var)
        capture.a_hat_var = a_hat_v.data.copy()
        per_node_width = c.t_prime * c.heads_var * f
        mixed_v = mix_nodes(mixing_matrix(a_hat_v), var_out.reshape((n, per_node_width)))
        stream_two = (
            mixed_v.reshape((n, c.t_prime, c.heads_var * f))
            .transpose((1, 0, 2))
            .reshape((c.t_prime, n * c.heads_var * f))
        )

        merged = T.concat([stream_one, stream_two], axis=1)
        hidden = lstm_forward(self.lstm, merged)
        prediction = T.matmul(self.out_weight, hidden) + self.out_bias
        return prediction, capture


# -- checkpointing ---------------------------------------------------------------


def save_checkpoint(model: MultistreamGatModel, path, dataset_meta: dict | None = None) -> None:
    """Write config + parameters (and optional dataset metadata) as JSON.

    Serialization is deterministic: identical models produce identical bytes.
    """
    doc = {
        "format": CHECKPOINT_FORMAT,
        "config": dataclasses.asdict(model.config),
        "dataset": dataset_meta,
        "params": {
            name: {"shape": list(t.shape), "data": t.data.reshape(-1).tolist()}
            for name, t in model.parameter_items()
        },
    }
    with open(path, "w") as f:
        json.dump(doc, f, sort_keys=True, separators=(",", ":"))
        f.write("\n")


def load_checkpoint(path) -> tuple[MultistreamGatModel, dict | None]:
    try:
        with open(path) as f:
            doc = json.load(f)
    except (OSError, json.JSONDecodeError) as exc:
        raise ConfigError(f"cannot read checkpoint {path}: {exc}") from exc
    if not isinstance(doc, dict) or doc.get("format") != CHECKPOINT_FORMAT:
        raise ConfigError(
            f"{path} is not a {CHECKPOINT_FORMAT} checkpoint (format={doc.get('format')!r})"
        )
    try:
        config = ModelConfig(**doc["config"])
    except TypeError as exc:
        raise ConfigError(f"bad checkpoint config: {exc}") from exc
    model = MultistreamGatModel(config)
    params = doc["params"]
    for name, tensor in model.parameter_items():
        if name not in params:
            raise ConfigError(f"checkpoint missing parameter '{name}'")
        entry = params[name]
        if tuple(entry["shape"]) != tensor.shape:
            raise ConfigError(
                f"parameter '{name}' shape {entry['shape']} does not match model {list(tensor.shape)}"
            )
        tensor.data[:] = np.array(entry["data"], dtype=np.float64).reshape(tensor.shape)
    extra = set(params) - {name for name, _ in model.parameter_items()}
    if extra:
        raise ConfigError(f"checkpoint has unknown parameters: {sorted(extra)}")
    return model, doc.get("dataset")
