"""Modularity with a loop-free null model and a resolution parameter.

For a layer with weights ``w``, out-strengths ``s``, in-strengths ``t`` and
total weight ``m``, the expected weight of ``i -> j`` (``i != j``) averages
the two ways of redistributing weight while excluding self-loops::

    null_ij = (s_i t_j / (m - t_i) + s_i t_j / (m - s_j)) / 2

and the quality of a partition is ``sum_{i != j} (w_ij - a null_ij) / m``
over pairs sharing a community.  The multi-layer score is the plain average
of the per-layer scores.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence, Union

import numpy as np

from ..netcore import LayerGraph, MultiLayerNetwork, NetworkError, Partition, strengths

Layers = Union[LayerGraph, MultiLayerNetwork, Sequence[LayerGraph]]


def as_layers(net: Layers) -> list[LayerGraph]:
    if isinstance(net, LayerGraph):
        layers = [net]
    elif isinstance(net, MultiLayerNetwork):
        layers = net.graphs
    else:
        layers = list(net)
    if not layers:
        raise NetworkError("need at least one layer")
    n = layers[0].n
    if any(g.n != n for g in layers):
        raise NetworkError("layers must share the same node set")
    return layers


@dataclass(frozen=True)
class LayerStrengths:
    s: np.ndarray
    t: np.ndarray
    m: float


@dataclass(frozen=True)
class ModularityContext:
    layers: tuple[LayerStrengths, ...]
    a: float

    @classmethod
    def build(cls, net: Layers, a: float = 1.0) -> "ModularityContext":
        if not a > 0:
            raise NetworkError(f"resolution must be positive, got {a}")
        out = []
        for k, g in enumerate(as_layers(net)):
            s, t, m = strengths(g)
            if not m > 0:
                raise NetworkError(f"layer {k} has zero total weight")
            out.append(LayerStrengths(s, t, m))
        return cls(tuple(out), float(a))

    @property
    def layer_weights(self) -> np.ndarray:
        return np.full(len(self.layers), 1.0 / len(self.layers))


def null_weight(ctx: ModularityContext, layer: int, i: int, j: int) -> float:
    if i == j:
        raise NetworkError("null weight is defined for i != j only")
    ls = ctx.layers[layer]
    num = ls.s[i] * ls.t[j]
    if num == 0:
        return 0.0
    for node, den in ((i, ls.m - ls.t[i]), (j, ls.m - ls.s[j])):
        if not den > 0:
            raise NetworkError(f"degenerate null model: node {node} carries the whole layer weight")
    return 0.5 * (num / (ls.m - ls.t[i]) + num / (ls.m - ls.s[j]))


def null_matrix(s: np.ndarray, t: np.ndarray, m: float) -> np.ndarray:
    num = np.outer(s, t)
    den_row = m - t
    den_col = m - s
    live = num != 0
    np.fill_diagonal(live, False)
    bad_rows = np.flatnonzero(live.any(axis=1) & ~(den_row > 0))
    bad_cols = np.flatnonzero(live.any(axis=0) & ~(den_col > 0))
    if bad_rows.size or bad_cols.size:
        node = int(bad_rows[0] if bad_rows.size else bad_cols[0])
        raise NetworkError(f"degenerate null model: node {node} carries the whole layer weight")
    with np.errstate(divide="ignore", invalid="ignore"):
        null = 0.5 * (num / den_row[:, None] + num / den_col[None, :])
    null[~live] = 0.0
    return null


def layer_matrix(graph: LayerGraph, a: float) -> np.ndarray:
    """``B`` with ``Q = sum_ij B_ij [C_i == C_j]``; zero diagonal."""
    if not graph.loop_free:
        raise NetworkError("modularity is defined on loop-free layers")
    if not a > 0:
        raise NetworkError(f"resolution must be positive, got {a}")
    if graph.n == 1:
        # no ordered pairs i != j, the sum is empty
        return np.zeros((1, 1))
    s, t, m = strengths(graph)
    if not m > 0:
        raise NetworkError("modularity undefined on a layer with zero total weight")
    b = (graph.toarray() - a * null_matrix(s, t, m)) / m
    np.fill_diagonal(b, 0.0)
    return b


def multilayer_matrix(net: Layers, a: float) -> np.ndarray:
    layers = as_layers(net)
    b = np.zeros((layers[0].n, layers[0].n))
    for g in layers:
        b += layer_matrix(g, a)
    return b / len(layers)


def _score(b: np.ndarray, partition: Partition) -> float:
    if partition.n != b.shape[0]:
        raise NetworkError(f"partition has {partition.n} nodes, network has {b.shape[0]}")
    labels = partition.labels
    same = labels[:, None] == labels[None, :]
    return float(np.sum(b[same]))


def modularity(graph: LayerGraph, partition: Partition, a: float = 1.0) -> float:
    return _score(layer_matrix(graph, a), partition)


def multilayer_modularity(net: Layers, partition: Partition, a: float = 1.0) -> float:
    layers = as_layers(net)
    return sum(modularity(g, partition, a) for g in layers) / len(layers)
