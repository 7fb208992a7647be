"""Command-line pipeline: build -> stats -> fit -> detect / sweep -> compare.

Every subcommand reads one JSON config (paths inside it are relative to the
config file) and writes plain CSV/JSON under the output directory::

    {
      "registry": "registry.csv",
      "layers": [
        {"name": "flickr", "kind": "events", "path": "flickr.csv"},
        {"name": "twitter", "kind": "events", "path": "twitter.csv"},
        {"name": "migration", "kind": "od", "path": "migration.csv"}
      ],
      "aux": {"colonial": "colonial.csv", "language": "language.csv", "trade": "trade.csv"},
      "strength_threshold": 10,
      "resolutions": [1.0, 1.5, 2.0],
      "sweep_resolutions": [0.5, 1.0, 1.5, 2.0, 2.5, 3.0],
      "reference_resolution": null,
      "restarts": 1,
      "seed": 0,
      "out": "out"
    }

All results are computed before anything is written, so a failing command
leaves no partial output behind.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import logging
import sys
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional, Sequence

import numpy as np

from . import flowmodels, ingest, stats
from .community import best_of_restarts, resolution_sweep, similarity_report
from .netcore import CountryRegistry, LayerGraph, MultiLayerNetwork, NetworkError, Partition, filter_low_strength, strengths

log = logging.getLogger("mobnet")

LAYER_KINDS = ("events", "od")
MULTILAYER = "multilayer"


class ConfigError(ValueError):
    pass


@dataclass
class LayerSpec:
    name: str
    kind: str
    path: Path


@dataclass
class PipelineConfig:
    registry: Path
    layers: list[LayerSpec]
    out: Path
    aux: dict[str, Path] = field(default_factory=dict)
    strength_threshold: float = 10.0
    resolutions: list[float] = field(default_factory=lambda: [1.0, 1.5, 2.0])
    sweep_resolutions: list[float] = field(default_factory=lambda: [round(0.25 * k, 2) for k in range(2, 13)])
    reference_resolution: Optional[float] = None
    restarts: int = 1
    seed: int = 0

    @classmethod
    def load(cls, path: Path) -> "PipelineConfig":
        path = Path(path)
        try:
            raw = json.loads(path.read_text(encoding="utf-8"))
        except FileNotFoundError:
            raise ConfigError(f"config file not found: {path}") from None
        except json.JSONDecodeError as exc:
            raise ConfigError(f"{path}:{exc.lineno}: invalid JSON: {exc.msg}") from None
        base = path.parent
        try:
            layers = [
                LayerSpec(str(spec["name"]), str(spec["kind"]), base / spec["path"])
                for spec in raw["layers"]
            ]
            cfg = cls(
                registry=base / raw["registry"],
                layers=layers,
                out=base / raw.get("out", "out"),
                aux={k: base / v for k, v in raw.get("aux", {}).items()},
                strength_threshold=float(raw.get("strength_threshold", 10.0)),
                reference_resolution=raw.get("reference_resolution"),
                restarts=int(raw.get("restarts", 1)),
                seed=int(raw.get("seed", 0)),
            )
        except KeyError as exc:
            raise ConfigError(f"{path}: missing config field {exc}") from None
        if "resolutions" in raw:
            cfg.resolutions = [float(a) for a in raw["resolutions"]]
        if "sweep_resolutions" in raw:
            cfg.sweep_resolutions = [float(a) for a in raw["sweep_resolutions"]]
        return cfg

    def validate(self, need_inputs: bool = True) -> None:
        names = [spec.name for spec in self.layers]
        if not names:
            raise ConfigError("config lists no layers")
        if len(set(names)) != len(names) or MULTILAYER in names:
            raise ConfigError(f"layer names must be unique and not {MULTILAYER!r}: {names}")
        for spec in self.layers:
            if spec.kind not in LAYER_KINDS:
                raise ConfigError(f"layer {spec.name!r}: kind must be one of {LAYER_KINDS}")
        for kind in self.aux:
            if kind not in ingest.AUX_KINDS:
                raise ConfigError(f"unknown auxiliary network {kind!r}")
        if self.strength_threshold < 0:
            raise ConfigError("strength_threshold must be >= 0")
        for a in list(self.resolutions) + list(self.sweep_resolutions):
            if not a > 0:
                raise ConfigError(f"resolution values must be positive, got {a}")
        if self.reference_resolution is not None and not self.reference_resolution > 0:
            raise ConfigError("reference_resolution must be positive")
        if self.restarts < 1:
            raise ConfigError("restarts must be >= 1")
        if need_inputs:
            for p in [self.registry] + [spec.path for spec in self.layers]:
                if not p.is_file():
                    raise ConfigError(f"input file not found: {p}")


# ---------------------------------------------------------------- output helpers

Files = dict[str, str]


def _fmt(x) -> str:
    if isinstance(x, (float, np.floating)):
        return repr(float(x))
    if isinstance(x, (np.integer,)):
        return str(int(x))
    return str(x)


def _csv(header: Sequence[str], rows) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(header)
    for row in rows:
        writer.writerow([_fmt(x) for x in row])
    return buf.getvalue()


def _json(obj) -> str:
    return json.dumps(obj, indent=2, sort_keys=True, allow_nan=True) + "\n"


def _write_tree(root: Path, files: Files) -> None:
    for rel, content in sorted(files.items()):
        target = root / rel
        target.parent.mkdir(parents=True, exist_ok=True)
        target.write_text(content, encoding="utf-8")


def _res_dir(a: float) -> str:
    return f"a={a:g}"


def _edges_csv(graph: LayerGraph, registry: CountryRegistry) -> str:
    codes = registry.codes
    return "".join(f"{codes[i]},{codes[j]},{_fmt(w)}\n" for i, j, w in graph.edges())


def _registry_csv(registry: CountryRegistry) -> str:
    rows = zip(registry.codes, registry.population.astype(np.int64), registry.lat, registry.lon)
    return "".join(",".join(_fmt(x) for x in row) + "\n" for row in rows)


def _partition_csv(partition: Partition, registry: CountryRegistry) -> str:
    return _csv(["iso", "community_label"], zip(registry.codes, partition.labels))


# ---------------------------------------------------------------- build

def cmd_build(cfg: PipelineConfig) -> Files:
    cfg.validate()
    registry, reg_report = ingest.load_registry(cfg.registry)
    if len(registry) == 0:
        raise NetworkError(f"{cfg.registry}: registry has no valid rows")
    files: Files = {}
    layers = []
    layer_meta = []
    for spec in cfg.layers:
        meta = {"name": spec.name, "kind": spec.kind}
        if spec.kind == "events":
            res = ingest.load_events_layer(spec.path, registry)
            graph, report = res.graph, res.report
            meta.update(users_total=res.users_total, users_resolved=res.users_resolved)
            rates = ingest.penetration(graph, registry)
            files[f"network/penetration_{spec.name}.csv"] = _csv(
                ["country", "users_per_million"], zip(registry.codes, rates)
            )
            meta["low_penetration_share"] = ingest.low_penetration_share(rates)
        else:
            graph, report = ingest.load_migration(spec.path, registry)
        if graph.nnz == 0:
            raise NetworkError(f"{spec.path}: layer {spec.name!r} has no edges")
        meta.update(report.as_dict())
        layers.append((spec.name, graph))
        layer_meta.append(meta)
    net = MultiLayerNetwork(registry, tuple(layers))
    filtered = filter_low_strength(net, cfg.strength_threshold)
    for meta, (name, graph) in zip(layer_meta, filtered.layers):
        _, _, m = strengths(graph)
        if graph.nnz == 0:
            raise NetworkError(f"layer {name!r} is empty after filtering")
        meta.update(edges=graph.nnz, total_weight=m)
        files[f"network/layers/{name}.csv"] = _edges_csv(graph, filtered.registry)
    files["network/registry.csv"] = _registry_csv(filtered.registry)
    files["network/manifest.json"] = _json({
        "layers": layer_meta,
        "layer_count": len(layer_meta),
        "registry_rows": reg_report.as_dict(),
        "nodes_before_filter": net.n,
        "nodes": filtered.n,
        "strength_threshold": cfg.strength_threshold,
    })
    return files


@dataclass
class BuiltNetwork:
    network: MultiLayerNetwork
    kinds: dict[str, str]


def load_built(out: Path) -> BuiltNetwork:
    root = Path(out) / "network"
    manifest_path = root / "manifest.json"
    if not manifest_path.is_file():
        raise ConfigError(f"no built network at {root}; run `mobnet build` first")
    manifest = json.loads(manifest_path.read_text(encoding="utf-8"))
    registry, _ = ingest.load_registry(root / "registry.csv")
    layers = []
    kinds = {}
    for meta in manifest["layers"]:
        graph, report = ingest.load_migration(root / "layers" / f"{meta['name']}.csv", registry)
        if report.skipped:
            raise NetworkError(f"corrupt built layer: {report.problems[0]}")
        layers.append((meta["name"], graph))
        kinds[meta["name"]] = meta["kind"]
    return BuiltNetwork(MultiLayerNetwork(registry, tuple(layers)), kinds)


# ---------------------------------------------------------------- stats

def cmd_stats(cfg: PipelineConfig) -> Files:
    cfg.validate(need_inputs=False)
    built = load_built(cfg.out)
    net = built.network
    files: Files = {}
    summary = {}
    for name, graph in net.layers:
        v = stats.normalized_in_strength(graph)
        rel = stats.relative_out_weights(graph).matrix.data
        fit_in = stats.lognormal_fit(v[v > 0])
        fit_w = stats.lognormal_fit(rel)
        cov = stats.flow_coverage(graph)
        files[f"stats/in_strength_cdf_{name}.csv"] = _csv(["value", "cdf"], fit_in.ecdf_rows())
        files[f"stats/link_weight_cdf_{name}.csv"] = _csv(["value", "cdf"], fit_w.ecdf_rows())
        files[f"stats/coverage_{name}.csv"] = _csv(["link_fraction", "flow_fraction"], cov.points)
        summary[name] = {
            "in_strength_lognormal": {"mu": fit_in.mu, "sigma": fit_in.sigma},
            "link_weight_lognormal": {"mu": fit_w.mu, "sigma": fit_w.sigma},
            "coverage_top1pct": cov.flow_at(0.01),
            "coverage_top10pct": cov.flow_at(0.10),
        }
    short = [n for n in net.names if built.kinds[n] == "events"]
    long_ = [n for n in net.names if built.kinds[n] == "od"]
    if len(short) == 2 and len(long_) == 1:
        table = stats.attractiveness_ranks(net[short[0]], net[short[1]], net[long_[0]])
        files["stats/ranks.csv"] = _csv(
            ["country", "rank_short", "rank_migration"],
            zip(net.registry.codes, table.short_term_rank, table.migration_rank),
        )
        summary["spearman_short_vs_long"] = table.spearman
    else:
        log.info("rank comparison needs two event layers and one od layer; skipped")
    files["stats/summary.json"] = _json(summary)
    return files


# ---------------------------------------------------------------- fit

def cmd_fit(cfg: PipelineConfig) -> Files:
    cfg.validate(need_inputs=False)
    net = load_built(cfg.out).network
    dist = flowmodels.haversine_matrix(net.registry)
    report = {}
    rows = []
    for name, graph in net.layers:
        s, _, _ = strengths(graph)
        fits = [
            flowmodels.fit_gravity(graph, s, net.registry, dist),
            flowmodels.fit_local_gravity(graph, s, net.registry, dist),
            flowmodels.evaluate_radiation(graph, s, net.registry, dist),
        ]
        report[name] = [f.to_json() for f in fits]
        rows.extend(
            (name, f.model, "" if f.alpha is None else f.alpha, "" if f.logC is None else f.logC,
             f.r2_log, f.n_links_used)
            for f in fits
        )
    return {
        "fit/fit_report.json": _json(report),
        "fit/fit_table.csv": _csv(["layer", "model", "alpha", "logC", "r2_log", "n_links"], rows),
    }


# ---------------------------------------------------------------- detect / sweep / compare

def _mobility_networks(net: MultiLayerNetwork):
    """Each layer alone, then the full stack."""
    for name, graph in net.layers:
        yield name, [graph]
    yield MULTILAYER, net.graphs


def _sweep_files(net: MultiLayerNetwork, a_values, cfg: PipelineConfig, prefix: str, with_partitions: bool) -> Files:
    files: Files = {}
    for name, layers in _mobility_networks(net):
        points = resolution_sweep(layers, a_values, cfg.seed, cfg.restarts)
        files[f"{prefix}/sweep_{name}.csv"] = _csv(
            ["a", "n_communities", "Q"], ((p.a, p.community_count, p.Q) for p in points)
        )
        if with_partitions:
            for p in points:
                files[f"{prefix}/{_res_dir(p.a)}/{name}.csv"] = _partition_csv(p.partition, net.registry)
    return files


def cmd_detect(cfg: PipelineConfig) -> Files:
    cfg.validate(need_inputs=False)
    net = load_built(cfg.out).network
    return _sweep_files(net, cfg.resolutions, cfg, "detect", with_partitions=True)


def cmd_sweep(cfg: PipelineConfig) -> Files:
    cfg.validate(need_inputs=False)
    net = load_built(cfg.out).network
    return _sweep_files(net, cfg.sweep_resolutions, cfg, "sweep", with_partitions=False)


def cmd_compare(cfg: PipelineConfig) -> Files:
    cfg.validate(need_inputs=False)
    if not cfg.aux:
        raise ConfigError("compare needs at least one auxiliary network under 'aux'")
    for kind, path in cfg.aux.items():
        if not path.is_file():
            raise ConfigError(f"auxiliary {kind} file not found: {path}")
    net = load_built(cfg.out).network
    aux_graphs = {}
    for kind, path in sorted(cfg.aux.items()):
        aux, _ = ingest.load_aux(kind, path, net.registry)
        if aux.graph.nnz == 0:
            raise NetworkError(f"{path}: auxiliary {kind} network has no edges among the built countries")
        aux_graphs[kind] = aux.graph
    files: Files = {}
    for a in cfg.resolutions:
        ref_a = cfg.reference_resolution if cfg.reference_resolution is not None else a
        refs = {kind: best_of_restarts([g], ref_a, cfg.seed, cfg.restarts).partition
                for kind, g in aux_graphs.items()}
        mob = {name: best_of_restarts(layers, a, cfg.seed, cfg.restarts).partition
               for name, layers in _mobility_networks(net)}
        table = similarity_report(mob, refs)
        kinds = list(refs)
        files[f"compare/{_res_dir(a)}/similarity.csv"] = _csv(
            ["network"] + kinds + ["average"],
            ([row.name] + [row.scores[k] for k in kinds] + [row.average] for row in table),
        )
        for kind, part in refs.items():
            files[f"compare/{_res_dir(a)}/reference_{kind}.csv"] = _partition_csv(part, net.registry)
    return files


COMMANDS = {
    "build": cmd_build,
    "stats": cmd_stats,
    "fit": cmd_fit,
    "detect": cmd_detect,
    "sweep": cmd_sweep,
    "compare": cmd_compare,
}


def _parse_resolutions(text: str) -> list[float]:
    try:
        return [float(x) for x in text.replace(" ", "").split(",") if x]
    except ValueError:
        raise argparse.ArgumentTypeError(f"bad resolution list {text!r}") from None


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="mobnet", description=__doc__.split("\n\n")[0])
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        p = sub.add_parser(name)
        p.add_argument("--config", required=True, type=Path)
        p.add_argument("--seed", type=int)
        p.add_argument("--resolution", type=_parse_resolutions,
                       help="comma-separated resolution values")
        p.add_argument("--threshold", type=float, help="minimum in/out strength per layer")
        p.add_argument("--out", type=Path)
    return parser


def run(argv: Optional[Sequence[str]] = None) -> Files:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    cfg = PipelineConfig.load(args.config)
    if args.seed is not None:
        cfg.seed = args.seed
    if args.threshold is not None:
        cfg.strength_threshold = args.threshold
    if args.out is not None:
        cfg.out = args.out
    if args.resolution is not None:
        if args.command == "sweep":
            cfg.sweep_resolutions = args.resolution
        else:
            cfg.resolutions = args.resolution
    files = COMMANDS[args.command](cfg)
    _write_tree(cfg.out, files)
    return files


def main(argv: Optional[Sequence[str]] = None) -> int:
    try:
        run(argv)
    except (ConfigError, NetworkError, OSError) as exc:
        print(f"mobnet: error: {exc}", file=sys.stderr)
        return 2
    return 0


if __name__ == "__main__":
    sys.exit(main())
