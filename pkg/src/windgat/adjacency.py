"""Learnable station-to-station adjacency and its normalized forms.

The raw matrix is an unconstrained trainable parameter. Each forward
pass derives, functionally and differentiably:

* a self-looped, min-max normalized adjacency (entries in [0, 1]),
* the degree-symmetric mixing matrix used to blend node features.
"""

from __future__ import annotations

import numpy as np

from . import tensor as T
from .errors import NumericError, ShapeError
from .tensor import Tensor


class LearnableAdjacency:
    """Trainable N x N connection-strength matrix for N stations."""

    def __init__(self, n_nodes: int, rng: np.random.Generator):
        if n_nodes < 2:
            raise ShapeError(f"adjacency needs at least 2 nodes, got {n_nodes}")
        self.n_nodes = n_nodes
        # uniform [0,1) init: breaks symmetry, keeps min-max non-degenerate
        self.matrix = Tensor(rng.uniform(0.0, 1.0, size=(n_nodes, n_nodes)), requires_grad=True)


def normalize_adjacency(adj: LearnableAdjacency | Tensor) -> Tensor:
    """Add self-loops, then min-max normalize over the whole matrix.

    Output entries lie in [0, 1] with an exact 0 and an exact 1. Min and
    max are global (whole matrix), and the gradient at the arg-min/max
    follows the tensor layer's first-occurrence subgradient.
    """
    a = adj.matrix if isinstance(adj, LearnableAdjacency) else adj
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise ShapeError(f"adjacency must be square, got {a.shape}")
    with_loops = a + Tensor(np.eye(a.shape[0]))
    lo = T.tensor_min(with_loops)
    hi = T.tensor_max(with_loops)
    if hi.item() == lo.item():
        raise NumericError("degenerate adjacency: all entries equal after adding self-loops")
    return (with_loops - lo) * T.power(hi - lo, -1.0)


def mixing_matrix(a_hat: Tensor) -> Tensor:
    """Degree-symmetric normalization of a non-negative adjacency.

    Computes diag(d)^-1/2 A diag(d)^-1/2 where d are the row sums.
    Differentiable through ``a_hat``; symmetric iff ``a_hat`` is.
    """
    if a_hat.ndim != 2 or a_hat.shape[0] != a_hat.shape[1]:
        raise ShapeError(f"mixing_matrix needs a square matrix, got {a_hat.shape}")
    if (a_hat.data < 0).any():
        raise NumericError("mixing_matrix needs non-negative entries")
    degrees = a_hat.sum(axis=1)
    if (degrees.data <= 0).any():
        raise NumericError("degenerate degree: a row of the adjacency sums to zero")
    inv_sqrt = T.power(degrees, -0.5)
    n = a_hat.shape[0]
    return a_hat * inv_sqrt.reshape((n, 1)) * inv_sqrt.reshape((1, n))


def mix_nodes(mixing: Tensor, features: Tensor) -> Tensor:
    """Blend per-node feature rows: row i becomes sum_j S_ij * features_j."""
    if mixing.shape[1] != features.shape[0]:
        raise ShapeError(
            f"mixing matrix {mixing.shape} does not match {features.shape[0]} feature rows"
        )
    return T.matmul(mixing, features)
