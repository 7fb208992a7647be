"""On-disk input corpora for exercising the command-line pipeline."""

import json
from itertools import combinations
from pathlib import Path

import numpy as np

from mobnet.netcore import CountryRegistry, LayerGraph, Partition
from mobnet.synthetic import event_log, gravity_network, planted_layer, planted_multilayer, random_registry

from conftest import write_lines


def registry_rows(reg: CountryRegistry):
    return [(c, int(p), repr(float(la)), repr(float(lo)))
            for c, p, la, lo in zip(reg.codes, reg.population, reg.lat, reg.lon)]


def edge_rows(graph: LayerGraph, reg: CountryRegistry, scale=1.0, integer=False):
    rows = []
    for i, j, w in graph.edges():
        w = w * scale
        rows.append((reg.codes[i], reg.codes[j], int(round(w)) if integer else repr(w)))
    return [r for r in rows if not integer or r[2] > 0]


def write_config(root: Path, **fields) -> Path:
    cfg = {"registry": "registry.csv", "out": "out", "seed": 0}
    cfg.update(fields)
    path = root / "config.json"
    path.write_text(json.dumps(cfg, indent=2), encoding="utf-8")
    return path


def pipeline_fixture(root: Path, seed: int = 0, countries: int = 25, users: int = 4000) -> Path:
    """Two event logs, a gravity-shaped migration table and three auxiliary tables."""
    root.mkdir(parents=True, exist_ok=True)
    rng = np.random.default_rng(seed)
    reg = random_registry(countries, rng, pop_range=(1e6, 2e8))
    write_lines(root / "registry.csv", registry_rows(reg))
    for name in ("flickr", "twitter"):
        write_lines(root / f"{name}.csv", event_log(reg, users, rng))
    s = rng.uniform(1e3, 1e5, countries)
    mig = gravity_network(reg, s, 2.0, np.log(1e-1), noise=0.3, rng=rng)
    write_lines(root / "migration.csv", edge_rows(mig, reg, integer=True))
    pairs = list(combinations(reg.codes, 2))
    pick = rng.choice(len(pairs), size=3 * countries, replace=False)
    write_lines(root / "language.csv", [pairs[k] for k in pick[:2 * countries]])
    write_lines(root / "colonial.csv", [pairs[k] for k in pick[2 * countries:]])
    trade = gravity_network(reg, s, 1.0, 0.0, noise=0.5, rng=rng)
    write_lines(root / "trade.csv", edge_rows(trade, reg))
    return write_config(
        root,
        layers=[
            {"name": "flickr", "kind": "events", "path": "flickr.csv"},
            {"name": "twitter", "kind": "events", "path": "twitter.csv"},
            {"name": "migration", "kind": "od", "path": "migration.csv"},
        ],
        aux={"language": "language.csv", "colonial": "colonial.csv", "trade": "trade.csv"},
        strength_threshold=10,
        resolutions=[1.0, 1.5, 2.0],
        sweep_resolutions=[0.5, 1.0, 2.0],
    )


def planted_fixture(root: Path, seed: int = 0, n: int = 60, communities: int = 4):
    """Three corrupted layers over a planted partition; references share the planted blocks."""
    root.mkdir(parents=True, exist_ok=True)
    rng = np.random.default_rng(seed)
    pl = planted_multilayer(n, communities, rng=rng)
    reg = pl.network.registry
    write_lines(root / "registry.csv", registry_rows(reg))
    layers = []
    for name, g in pl.network.layers:
        write_lines(root / f"{name}.csv", edge_rows(g, reg, scale=100.0))
        layers.append({"name": name, "kind": "od", "path": f"{name}.csv"})
    blocks = pl.planted.blocks()
    within = [(reg.codes[i], reg.codes[j]) for blk in blocks for i, j in combinations(blk, 2)]
    write_lines(root / "language.csv", within)
    write_lines(root / "colonial.csv", within[::2])
    trade = planted_layer(pl.planted, rng, rewire=0.05, inner_links=5)
    write_lines(root / "trade.csv", edge_rows(trade, reg, scale=1e6))
    cfg = write_config(
        root,
        layers=layers,
        aux={"language": "language.csv", "colonial": "colonial.csv", "trade": "trade.csv"},
        strength_threshold=0,
        resolutions=[1.0],
    )
    return cfg, pl.planted
