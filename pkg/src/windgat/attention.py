"""The two graph-attention streams.

Stream one is the classical formulation: each station carries a flat
feature vector, attention between a pair of stations is a scalar, and
aggregation is a weighted sum of linearly projected neighbors.

Stream two keeps station features as a (timesteps x variables) matrix.
The shared projection acts on the time axis only, and the attention
logit for a station pair comes out as one value per weather variable,
so each variable gets its own softmax over source stations and its own
diagonal weighting during aggregation.

Both streams use a LeakyReLU with negative slope 0.2 on the logits, a
softmax over all stations (the graph is fully connected; connection
strength is learned elsewhere), and ELU on the aggregated output.
Multiple independent heads are concatenated in construction order.
"""

from __future__ import annotations

import numpy as np

from . import tensor as T
from .errors import ShapeError
from .initializers import glorot_uniform
from .tensor import Tensor

LEAKY_SLOPE = 0.2


class ScalarGatHead:
    """One attention head over flattened per-station features."""

    def __init__(self, in_features: int, out_features: int, rng: np.random.Generator):
        if out_features < 1:
            raise ShapeError("head output width must be >= 1")
        self.in_features = in_features
        self.out_features = out_features
        self.w = Tensor(glorot_uniform(rng, (out_features, in_features)), requires_grad=True)
        self.a = Tensor(glorot_uniform(rng, (2 * out_features,)), requires_grad=True)


class VariableGatHead:
    """One attention head whose projection acts on the time axis only."""

    def __init__(self, t_in: int, t_out: int, rng: np.random.Generator):
        if t_out < 1:
            raise ShapeError("transformed time width must be >= 1")
        self.t_in = t_in
        self.t_out = t_out
        self.w = Tensor(glorot_uniform(rng, (t_out, t_in)), requires_grad=True)
        self.a = Tensor(glorot_uniform(rng, (2 * t_out,)), requires_grad=True)


def _split_attention_vector(a: Tensor, half: int) -> tuple[Tensor, Tensor]:
    pair = a.reshape((2, half))
    return pair[0], pair[1]


def scalar_attention(head: ScalarGatHead, x: Tensor) -> Tensor:
    """Pairwise attention over stations with flat features.

    ``x`` is (stations x features); returns an (N x N) matrix whose rows
    are softmax-normalized over all stations.
    """
    n = x.shape[0]
    if x.ndim != 2 or x.shape[1] != head.in_features:
        raise ShapeError(f"expected features (N, {head.in_features}), got {x.shape}")
    projected = T.matmul(x, head.w.transpose())  # N x d'
    a_self, a_other = _split_attention_vector(head.a, head.out_features)
    score_self = T.matmul(projected, a_self)  # contribution of the target station i
    score_other = T.matmul(projected, a_other)  # contribution of the source station j
    logits = T.leaky_relu(
        score_self.reshape((n, 1)) + score_other.reshape((1, n)), LEAKY_SLOPE
    )
    return T.softmax(logits, axis=1)


def scalar_gat_forward(head: ScalarGatHead, x: Tensor, alpha: Tensor) -> Tensor:
    """Attention-weighted aggregation of projected neighbors, ELU output."""
    if alpha.shape != (x.shape[0], x.shape[0]):
        raise ShapeError(f"attention {alpha.shape} does not match {x.shape[0]} stations")
    projected = T.matmul(x, head.w.transpose())
    return T.elu(T.matmul(alpha, projected))


def _project_time(head: VariableGatHead, h: Tensor) -> Tensor:
    """Apply the time-axis map to every station: (N,T,F) -> (N,T',F)."""
    n, t, f = h.shape
    time_major = h.transpose((1, 0, 2)).reshape((t, n * f))
    projected = T.matmul(head.w, time_major)  # T' x (N*F)
    return projected.reshape((head.t_out, n, f)).transpose((1, 0, 2))


def variable_attention(head: VariableGatHead, h: Tensor) -> Tensor:
    """Per-variable attention over stations with matrix features.

    ``h`` is (stations x timesteps x variables). For each ordered station
    pair the attention vector is applied to the concatenated time-projected
    features, yielding one logit per weather variable; softmax runs over
    source stations independently per (target station, variable). Returns
    (N x N x F).
    """
    if h.ndim != 3:
        raise ShapeError(f"expected (N, T, F) features, got {h.shape}")
    n, t, f = h.shape
    if t != head.t_in:
        raise ShapeError(f"expected {head.t_in} timesteps, got {t}")
    wh = _project_time(head, h)  # N x T' x F
    a_self, a_other = _split_attention_vector(head.a, head.t_out)
    flat = wh.transpose((1, 0, 2)).reshape((head.t_out, n * f))
    score_self = T.matmul(a_self, flat).reshape((n, f))
    score_other = T.matmul(a_other, flat).reshape((n, f))
    logits = T.leaky_relu(
        score_self.reshape((n, 1, f)) + score_other.reshape((1, n, f)), LEAKY_SLOPE
    )
    return T.softmax(logits, axis=1)


def variable_gat_forward(head: VariableGatHead, h: Tensor, alpha: Tensor) -> Tensor:
    """Aggregate neighbors with per-variable diagonal weighting, ELU output.

    Column p of every projected neighbor is scaled by that pair's p-th
    attention score before summation: out[i,:,p] = sum_j alpha[i,j,p] * wh[j,:,p].
    """
    n = h.shape[0]
    f = h.shape[2]
    if alpha.shape != (n, n, f):
        raise ShapeError(f"attention {alpha.shape} does not match features {h.shape}")
    wh = _project_time(head, h)  # N x T' x F
    weighted = alpha.reshape((n, n, 1, f)) * wh.reshape((1, n, head.t_out, f))
    return T.elu(weighted.sum(axis=1))


def multi_head(heads: list, features: Tensor, collect_alpha: list | None = None) -> Tensor:
    """Run K independent heads and concatenate their outputs.

    Scalar heads concatenate along the output-feature axis, variable heads
    along the variable axis; head order is construction order. When
    ``collect_alpha`` is given, each head's attention tensor is appended
    to it (detached from the graph).
    """
    if not heads:
        raise ShapeError("multi_head needs at least one head")
    kinds = {type(h) for h in heads}
    if len(kinds) != 1:
        raise ShapeError(f"heads must share one type, got {sorted(k.__name__ for k in kinds)}")
    outputs = []
    for head in heads:
        if isinstance(head, ScalarGatHead):
            alpha = scalar_attention(head, features)
            out = scalar_gat_forward(head, features, alpha)
        else:
            alpha = variable_attention(head, features)
            out = variable_gat_forward(head, features, alpha)
        if collect_alpha is not None:
            collect_alpha.append(alpha.data.copy())
        outputs.append(out)
    shapes = {o.shape for o in outputs}
    if len(shapes) != 1:
        raise ShapeError(f"heterogeneous head output shapes: {sorted(shapes)}")
    axis = 1 if isinstance(heads[0], ScalarGatHead) else 2
    return outputs[0] if len(outputs) == 1 else T.concat(outputs, axis=axis)
