"""Exhaustive modularity maximization over all set partitions (test oracle)."""

from __future__ import annotations

import numpy as np

from ..netcore import NetworkError, Partition
from .modularity import Layers, as_layers, multilayer_matrix

MAX_NODES = 12


def restricted_growth_strings(n: int) -> np.ndarray:
    """All set partitions of ``n`` nodes as restricted growth strings.

    Rows come in descending lexicographic order, so the singleton partition
    is first and the all-in-one partition last.
    """
    if n == 0:
        return np.zeros((1, 0), dtype=np.int8)
    rows = np.zeros((1, 1), dtype=np.int8)
    top = np.zeros(1, dtype=np.int8)
    for _ in range(1, n):
        counts = (top + 2).astype(np.int64)
        parent = np.repeat(np.arange(rows.shape[0]), counts)
        offsets = np.arange(parent.size) - np.repeat(np.cumsum(counts) - counts, counts)
        label = (top[parent] + 1 - offsets).astype(np.int8)
        rows = np.column_stack([rows[parent], label])
        top = np.maximum(top[parent], label)
    return rows


def brute_force_partition(net: Layers, a: float = 1.0, chunk: int = 1 << 15) -> tuple[Partition, float]:
    """Global maximum of the layer-averaged modularity by enumeration.

    Ties go to the first maximizer in :func:`restricted_growth_strings` order.
    """
    layers = as_layers(net)
    n = layers[0].n
    if n > MAX_NODES:
        raise NetworkError(f"brute force limited to {MAX_NODES} nodes, got {n}")
    B = multilayer_matrix(layers, a)
    rgs = restricted_growth_strings(n)
    best_q, best_row = -np.inf, 0
    for start in range(0, rgs.shape[0], chunk):
        block = rgs[start:start + chunk]
        same = block[:, :, None] == block[:, None, :]
        q = np.einsum("kij,ij->k", same, B)
        k = int(np.argmax(q))
        if q[k] > best_q:
            best_q, best_row = float(q[k]), start + k
    return Partition(rgs[best_row]), best_q
