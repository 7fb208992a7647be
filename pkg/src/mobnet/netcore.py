"""Core data model: countries, weighted digraph layers, layer stacks, partitions."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable, Iterator, Sequence

import numpy as np
import scipy.sparse as sp


class NetworkError(ValueError):
    """Raised when a network object is malformed or an operation is undefined on it."""


@dataclass(frozen=True)
class CountryRegistry:
    """Canonical node set shared by every layer.

    Dense ids are positions in ``codes``; they are never serialized, the ISO
    code is the identity of a node.
    """

    codes: tuple[str, ...]
    population: np.ndarray
    lat: np.ndarray
    lon: np.ndarray
    index: dict[str, int] = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        codes = tuple(str(c) for c in self.codes)
        n = len(codes)
        pop = np.asarray(self.population, dtype=float).reshape(-1)
        lat = np.asarray(self.lat, dtype=float).reshape(-1)
        lon = np.asarray(self.lon, dtype=float).reshape(-1)
        if not (pop.size == lat.size == lon.size == n):
            raise NetworkError("registry columns have different lengths")
        index = {}
        for i, c in enumerate(codes):
            if not 2 <= len(c) <= 3:
                raise NetworkError(f"invalid iso code {c!r}")
            if c in index:
                raise NetworkError(f"duplicate iso code {c!r}")
            index[c] = i
        if np.any(pop < 0) or not np.all(np.isfinite(pop)):
            raise NetworkError("populations must be finite and nonnegative")
        if np.any(np.abs(lat) > 90) or np.any(np.abs(lon) > 180):
            raise NetworkError("centroid outside valid latitude/longitude range")
        for name, arr in (("population", pop), ("lat", lat), ("lon", lon)):
            arr.setflags(write=False)
            object.__setattr__(self, name, arr)
        object.__setattr__(self, "codes", codes)
        object.__setattr__(self, "index", index)

    @classmethod
    def from_rows(cls, rows: Iterable[tuple[str, float, float, float]]) -> "CountryRegistry":
        rows = list(rows)
        if not rows:
            return cls((), np.zeros(0), np.zeros(0), np.zeros(0))
        codes, pop, lat, lon = zip(*rows)
        return cls(codes, np.array(pop), np.array(lat), np.array(lon))

    def __len__(self) -> int:
        return len(self.codes)

    def __contains__(self, code: str) -> bool:
        return code in self.index

    def subset(self, ids: Sequence[int]) -> "CountryRegistry":
        ids = np.asarray(ids, dtype=int)
        return CountryRegistry(
            tuple(self.codes[i] for i in ids),
            self.population[ids],
            self.lat[ids],
            self.lon[ids],
        )


class LayerGraph:
    """Directed weighted OD matrix for one mobility layer.

    Weights live in a CSR matrix; an absent entry means zero weight.
    """

    __slots__ = ("_w", "loop_free")

    def __init__(self, weights, loop_free: bool = False):
        w = sp.csr_matrix(weights, dtype=float)
        if w.shape[0] != w.shape[1]:
            raise NetworkError(f"weight matrix must be square, got {w.shape}")
        w.eliminate_zeros()
        w.sum_duplicates()
        if w.nnz and (np.any(w.data < 0) or not np.all(np.isfinite(w.data))):
            raise NetworkError("weights must be finite and nonnegative")
        if loop_free and w.diagonal().any():
            raise NetworkError("graph flagged loop_free has loop entries")
        w.data.setflags(write=False)
        self._w = w
        self.loop_free = bool(loop_free)

    @classmethod
    def from_edges(cls, n: int, edges: Iterable[tuple[int, int, float]], loop_free: bool = False) -> "LayerGraph":
        """Build from (origin, destination, weight) triples; duplicates are summed."""
        edges = list(edges)
        if edges:
            rows, cols, vals = (np.asarray(x) for x in zip(*edges))
        else:
            rows = cols = np.zeros(0, dtype=int)
            vals = np.zeros(0)
        w = sp.coo_matrix((vals.astype(float), (rows.astype(int), cols.astype(int))), shape=(n, n))
        return cls(w, loop_free=loop_free)

    @classmethod
    def empty(cls, n: int) -> "LayerGraph":
        return cls(sp.csr_matrix((n, n)), loop_free=True)

    @property
    def n(self) -> int:
        return self._w.shape[0]

    @property
    def matrix(self) -> sp.csr_matrix:
        """Read-only view of the sparse weights."""
        return self._w

    @property
    def nnz(self) -> int:
        return self._w.nnz

    def toarray(self) -> np.ndarray:
        return self._w.toarray()

    def weight(self, i: int, j: int) -> float:
        return float(self._w[i, j])

    def edges(self) -> Iterator[tuple[int, int, float]]:
        """Yield nonzero (origin, destination, weight) in row-major order."""
        coo = self._w.tocoo()
        order = np.lexsort((coo.col, coo.row))
        for k in order:
            yield int(coo.row[k]), int(coo.col[k]), float(coo.data[k])

    def scaled(self, c: float) -> "LayerGraph":
        return LayerGraph(self._w * float(c), loop_free=self.loop_free)

    def permuted(self, perm: Sequence[int]) -> "LayerGraph":
        """Relabel so that new node ``k`` is old node ``perm[k]``."""
        perm = np.asarray(perm, dtype=int)
        return LayerGraph(self._w[perm][:, perm], loop_free=self.loop_free)

    def subgraph(self, ids: Sequence[int]) -> "LayerGraph":
        ids = np.asarray(ids, dtype=int)
        return LayerGraph(self._w[ids][:, ids], loop_free=self.loop_free)

    def __eq__(self, other):
        if not isinstance(other, LayerGraph):
            return NotImplemented
        if self.n != other.n or self.loop_free != other.loop_free:
            return False
        return (self._w != other._w).nnz == 0

    def __repr__(self):
        return f"LayerGraph(n={self.n}, nnz={self.nnz}, loop_free={self.loop_free})"


def strengths(graph: LayerGraph) -> tuple[np.ndarray, np.ndarray, float]:
    """Out-strengths ``s``, in-strengths ``t`` and total weight ``m``.

    Loop entries are excluded when the graph is flagged loop-free (there are
    none by construction in that case).
    """
    w = graph.matrix
    s = np.asarray(w.sum(axis=1)).reshape(-1)
    t = np.asarray(w.sum(axis=0)).reshape(-1)
    m = float(w.data.sum()) if w.nnz else 0.0
    return s, t, m


def strip_loops(graph: LayerGraph) -> LayerGraph:
    if graph.loop_free:
        return graph
    w = graph.matrix.tolil(copy=True)
    w.setdiag(0)
    return LayerGraph(w.tocsr(), loop_free=True)


@dataclass(frozen=True)
class MultiLayerNetwork:
    registry: CountryRegistry
    layers: tuple[tuple[str, LayerGraph], ...]

    def __post_init__(self):
        layers = tuple((str(name), g) for name, g in self.layers)
        names = [name for name, _ in layers]
        if len(set(names)) != len(names):
            raise NetworkError(f"layer names must be unique: {names}")
        n = len(self.registry)
        for name, g in layers:
            if g.n != n:
                raise NetworkError(f"layer {name!r} has {g.n} nodes, registry has {n}")
        object.__setattr__(self, "layers", layers)

    @property
    def n(self) -> int:
        return len(self.registry)

    @property
    def names(self) -> list[str]:
        return [name for name, _ in self.layers]

    @property
    def graphs(self) -> list[LayerGraph]:
        return [g for _, g in self.layers]

    def __getitem__(self, name: str) -> LayerGraph:
        for lname, g in self.layers:
            if lname == name:
                return g
        raise KeyError(name)

    def __len__(self) -> int:
        return len(self.layers)

    def select(self, names: Sequence[str]) -> "MultiLayerNetwork":
        return MultiLayerNetwork(self.registry, tuple((name, self[name]) for name in names))

    def subset(self, ids: Sequence[int]) -> "MultiLayerNetwork":
        return MultiLayerNetwork(
            self.registry.subset(ids),
            tuple((name, g.subgraph(ids)) for name, g in self.layers),
        )


def filter_low_strength(net: MultiLayerNetwork, threshold: float) -> MultiLayerNetwork:
    """Drop every node whose in- or out-strength is below ``threshold`` in any layer.

    A single pass: strengths are computed once on the input network, so the
    survivors may themselves fall below the threshold afterwards.
    """
    if threshold < 0:
        raise NetworkError("threshold must be nonnegative")
    keep = np.ones(net.n, dtype=bool)
    for _, g in net.layers:
        s, t, _ = strengths(g)
        keep &= (s >= threshold) & (t >= threshold)
    if not keep.any():
        raise NetworkError(f"threshold {threshold} removes every node")
    if keep.all():
        return net
    return net.subset(np.flatnonzero(keep))


class Partition:
    """Assignment of every node to exactly one community.

    Labels are renumbered contiguously from 0 in order of first appearance,
    so two partitions with the same blocks compare equal.
    """

    __slots__ = ("labels",)

    def __init__(self, labels):
        raw = np.asarray(labels).reshape(-1)
        if raw.size and raw.dtype.kind not in "iu":
            if not np.all(np.equal(np.mod(raw, 1), 0)):
                raise NetworkError("community labels must be integers")
        _, first, inverse = np.unique(raw, return_index=True, return_inverse=True)
        # rank unique labels by first occurrence
        order = np.argsort(np.argsort(first))
        out = order[inverse].astype(np.int64)
        out.setflags(write=False)
        self.labels = out

    @classmethod
    def singletons(cls, n: int) -> "Partition":
        return cls(np.arange(n))

    @classmethod
    def single(cls, n: int) -> "Partition":
        return cls(np.zeros(n, dtype=int))

    @classmethod
    def from_blocks(cls, n: int, blocks: Iterable[Iterable[int]]) -> "Partition":
        labels = np.full(n, -1, dtype=int)
        for c, block in enumerate(blocks):
            for v in block:
                if labels[v] != -1:
                    raise NetworkError(f"node {v} appears in two blocks")
                labels[v] = c
        if np.any(labels < 0):
            raise NetworkError("blocks do not cover every node")
        return cls(labels)

    @property
    def n(self) -> int:
        return self.labels.size

    @property
    def community_count(self) -> int:
        return int(self.labels.max()) + 1 if self.labels.size else 0

    @property
    def community_sizes(self) -> np.ndarray:
        return np.bincount(self.labels, minlength=self.community_count)

    def blocks(self) -> list[list[int]]:
        return [np.flatnonzero(self.labels == c).tolist() for c in range(self.community_count)]

    def permuted(self, perm: Sequence[int]) -> "Partition":
        return Partition(self.labels[np.asarray(perm, dtype=int)])

    def __len__(self) -> int:
        return self.n

    def __eq__(self, other):
        if not isinstance(other, Partition):
            return NotImplemented
        return np.array_equal(self.labels, other.labels)

    def __hash__(self):
        return hash(self.labels.tobytes())

    def __repr__(self):
        return f"Partition(n={self.n}, communities={self.community_count})"
