"""Descriptive statistics of mobility layers."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy import stats as sps

from .netcore import LayerGraph, NetworkError, strengths


def _require_loop_free(graph: LayerGraph) -> None:
    if not graph.loop_free:
        raise NetworkError("statistics are defined on loop-free layers; call strip_loops first")


def normalized_in_strength(graph: LayerGraph) -> np.ndarray:
    """Share of all non-loop flow that arrives at each destination."""
    _require_loop_free(graph)
    _, t, m = strengths(graph)
    if m <= 0:
        raise NetworkError("normalized in-strength undefined on a graph with zero total weight")
    return t / m


def relative_out_weights(graph: LayerGraph) -> LayerGraph:
    """Each edge weight divided by its origin's out-strength, as a (non-symmetric) graph."""
    _require_loop_free(graph)
    s, _, _ = strengths(graph)
    w = graph.matrix.tocoo()
    return LayerGraph.from_edges(
        graph.n, zip(w.row, w.col, w.data / s[w.row]), loop_free=True
    )


@dataclass(frozen=True)
class LognormalFit:
    mu: float
    sigma: float
    values: np.ndarray
    cdf: np.ndarray

    def ecdf_rows(self):
        return list(zip(self.values.tolist(), self.cdf.tolist()))


def lognormal_fit(values) -> LognormalFit:
    """Maximum-likelihood log-normal fit: mean and population SD of the logs.

    Also returns the empirical CDF (sorted values and ``k/N``) for plotting.
    """
    x = np.asarray(values, dtype=float).reshape(-1)
    if x.size < 2:
        raise NetworkError("log-normal fit needs at least 2 values")
    if np.any(~(x > 0)):
        raise NetworkError("log-normal fit requires strictly positive values")
    logs = np.log(x)
    # shift by one sample first so a constant input gives exactly sigma = 0
    shifted = logs - logs[0]
    centre = np.mean(shifted)
    mu = float(logs[0] + centre)
    sigma = float(np.sqrt(np.mean((shifted - centre) ** 2)))
    xs = np.sort(x)
    cdf = np.arange(1, xs.size + 1) / xs.size
    return LognormalFit(mu, sigma, xs, cdf)


@dataclass(frozen=True)
class CoverageCurve:
    link_fraction: np.ndarray
    flow_fraction: np.ndarray

    @property
    def points(self) -> list[tuple[float, float]]:
        return list(zip(self.link_fraction.tolist(), self.flow_fraction.tolist()))

    def flow_at(self, link_fraction: float) -> float:
        """Flow share covered by the top ``ceil(link_fraction * E)`` links."""
        n_links = self.flow_fraction.size
        k = min(n_links, int(np.ceil(link_fraction * n_links - 1e-9)))
        return float(self.flow_fraction[k - 1]) if k > 0 else 0.0


def flow_coverage(graph: LayerGraph) -> CoverageCurve:
    """Cumulative flow share against cumulative link share, heaviest links first."""
    _require_loop_free(graph)
    if graph.nnz == 0:
        raise NetworkError("flow coverage undefined on an empty graph")
    w = graph.matrix.tocoo()
    order = np.lexsort((w.col, w.row, -w.data))
    weights = w.data[order]
    flow = np.cumsum(weights) / weights.sum()
    flow[-1] = 1.0
    links = np.arange(1, weights.size + 1) / weights.size
    return CoverageCurve(links, flow)


@dataclass(frozen=True)
class RankTable:
    short_term_rank: np.ndarray
    migration_rank: np.ndarray
    flickr_rank: np.ndarray
    twitter_rank: np.ndarray
    spearman: float


def descending_ranks(values) -> np.ndarray:
    """Rank 1 for the largest value; tied values share their mean rank."""
    return sps.rankdata(-np.asarray(values, dtype=float), method="average")


def attractiveness_ranks(flickr: LayerGraph, twitter: LayerGraph, migration: LayerGraph) -> RankTable:
    """Short-term (mean of the two event layers) vs. long-term attractiveness ranks."""
    if not flickr.n == twitter.n == migration.n:
        raise NetworkError("layers must share the same node set")
    rf = descending_ranks(normalized_in_strength(flickr))
    rt = descending_ranks(normalized_in_strength(twitter))
    rm = descending_ranks(normalized_in_strength(migration))
    short = (rf + rt) / 2
    rho = float(sps.spearmanr(short, rm).statistic) if short.size > 1 else float("nan")
    return RankTable(short, rm, rf, rt, rho)
