"""Synthetic registries, networks and event logs for tests and fixtures."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np

from .flowmodels import DistanceMatrix, GravityParams, haversine_matrix, gravity_predict
from .netcore import CountryRegistry, LayerGraph, MultiLayerNetwork, Partition


def iso_codes(n: int) -> list[str]:
    """``n`` distinct three-letter codes AAA, AAB, ..."""
    letters = "ABCDEFGHIJKLMNOPQRSTUVWXYZ"
    return [letters[i // 676 % 26] + letters[i // 26 % 26] + letters[i % 26] for i in range(n)]


def random_registry(n: int, rng: np.random.Generator, pop_range: tuple[float, float] = (1e5, 1e9)) -> CountryRegistry:
    """Uniform points on the sphere with log-uniform integer populations."""
    lat = np.degrees(np.arcsin(rng.uniform(-1, 1, n)))
    lon = rng.uniform(-180, 180, n)
    lo, hi = np.log(pop_range[0]), np.log(pop_range[1])
    pop = np.round(np.exp(rng.uniform(lo, hi, n)))
    return CountryRegistry(tuple(iso_codes(n)), pop, lat, lon)


def gravity_network(registry: CountryRegistry, s_out: np.ndarray, alpha: float, logC: float,
                    dist: Optional[DistanceMatrix] = None, noise: float = 0.0,
                    rng: Optional[np.random.Generator] = None) -> LayerGraph:
    """Global gravity flows, optionally with multiplicative log-normal noise."""
    dist = haversine_matrix(registry) if dist is None else dist
    w = gravity_predict(s_out, registry, dist, GravityParams(alpha, logC)).toarray()
    if noise > 0:
        w = w * np.exp(rng.normal(0.0, noise, w.shape))
        np.fill_diagonal(w, 0.0)
    return LayerGraph(w, loop_free=True)


@dataclass(frozen=True)
class PlantedNetwork:
    network: MultiLayerNetwork
    planted: Partition


def planted_layer(planted: Partition, rng: np.random.Generator, rewire: float = 0.3,
                  inner_links: int = 2, outer_links: int = 1) -> LayerGraph:
    """One layer over a planted partition.

    Every node sends unit total weight: ``1 - rewire`` of it spread at random
    over ``inner_links`` members of its own community and ``rewire`` spread
    over ``outer_links`` targets drawn uniformly from the whole network.
    """
    labels = planted.labels
    n = labels.size
    rows, cols, vals = [], [], []
    for blk in planted.blocks():
        blk = np.asarray(blk)
        for v in blk:
            peers = blk[blk != v]
            k = min(inner_links, peers.size)
            if k:
                tgt = rng.choice(peers, size=k, replace=False)
                share = rng.dirichlet(np.ones(k)) * (1.0 - rewire)
                rows.extend([v] * k)
                cols.extend(tgt.tolist())
                vals.extend(share.tolist())
            others = np.delete(np.arange(n), v)
            tgt = rng.choice(others, size=outer_links, replace=False)
            share = rng.dirichlet(np.ones(outer_links)) * (rewire if k else 1.0)
            rows.extend([v] * outer_links)
            cols.extend(tgt.tolist())
            vals.extend(share.tolist())
    return LayerGraph.from_edges(n, zip(rows, cols, vals), loop_free=True)


def planted_multilayer(n: int = 200, communities: int = 8, layers: int = 3, rewire: float = 0.3,
                       rng: Optional[np.random.Generator] = None, **layer_kw) -> PlantedNetwork:
    """Layers sharing one planted partition, each corrupted independently."""
    rng = np.random.default_rng() if rng is None else rng
    planted = Partition(np.arange(n) % communities)
    registry = random_registry(n, rng)
    graphs = tuple((f"layer{k}", planted_layer(planted, rng, rewire, **layer_kw)) for k in range(layers))
    return PlantedNetwork(MultiLayerNetwork(registry, graphs), planted)


def random_digraph(n: int, rng: np.random.Generator, density: float = 0.5) -> LayerGraph:
    """Exponential weights on a random subset of ordered pairs; never empty for ``n >= 2``."""
    w = rng.exponential(1.0, (n, n)) * (rng.random((n, n)) < density)
    np.fill_diagonal(w, 0.0)
    if n >= 2 and not w.any():
        w[0, 1] = 1.0
    return LayerGraph(w, loop_free=True)


def event_log(registry: CountryRegistry, users: int, rng: np.random.Generator,
              trips: float = 1.5, events_per_country: int = 6, t0: float = 1.2e9,
              horizon: float = 3.0e8) -> list[tuple[str, int, str]]:
    """Fake geo-tagged activity: each user is busiest at home and makes a few trips abroad.

    Trip destinations favour populous countries.  Rows are ``(user, ts, iso)``.
    """
    n = len(registry)
    weight = registry.population / registry.population.sum()
    home_of = rng.choice(n, size=users, p=weight)
    rows = []
    for u, h in enumerate(home_of):
        uid = f"u{u:06d}"
        n_home = int(rng.integers(events_per_country, 3 * events_per_country))
        for ts in np.sort(rng.uniform(t0, t0 + horizon, n_home)):
            rows.append((uid, int(ts), registry.codes[h]))
        for _ in range(int(rng.poisson(trips))):
            d = int(rng.choice(n, p=weight))
            if d == h:
                continue
            start = rng.uniform(t0, t0 + horizon)
            for ts in np.sort(start + rng.uniform(0, 1.2e6, int(rng.integers(1, events_per_country)))):
                rows.append((uid, int(ts), registry.codes[d]))
    return rows
