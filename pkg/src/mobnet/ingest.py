"""Readers for event logs and tabular inputs, home detection and layer assembly.

All inputs are headerless, comma-separated UTF-8 files:

* registry: ``iso,population,lat,lon``
* events: ``user_id,timestamp,iso`` (timestamp in UTC epoch seconds)
* migration / trade: ``origin_iso,dest_iso,value``
* colonial / language pairs: ``iso_a,iso_b``

Malformed rows never abort a load.  They are logged with their line number
and counted in the returned :class:`LoadReport`.
"""

from __future__ import annotations

import csv
import logging
import math
from collections import defaultdict
from dataclasses import dataclass, field
from os import PathLike
from typing import Iterable, Iterator, Optional, Union

import numpy as np

from .netcore import CountryRegistry, LayerGraph, NetworkError, strengths

log = logging.getLogger(__name__)

PathOrLines = Union[str, PathLike, Iterable[str]]

AUX_KINDS = ("colonial", "language", "trade")
# per-file cap on skipped-row warnings; the rest go to debug
MAX_WARNINGS = 5


@dataclass
class LoadReport:
    """Row accounting for a loader: ``accepted + skipped == rows``."""

    source: str = "<stream>"
    rows: int = 0
    accepted: int = 0
    skipped: int = 0
    problems: list[str] = field(default_factory=list)

    def skip(self, lineno: int, reason: str) -> None:
        self.skipped += 1
        msg = f"{self.source}:{lineno}: {reason}"
        self.problems.append(msg)
        if self.skipped <= MAX_WARNINGS:
            log.warning(msg)
        else:
            if self.skipped == MAX_WARNINGS + 1:
                log.warning("%s: further skipped rows are logged at debug level", self.source)
            log.debug(msg)

    def as_dict(self) -> dict:
        return {"rows": self.rows, "accepted": self.accepted, "skipped": self.skipped}


@dataclass(frozen=True)
class EventRecord:
    user_id: str
    timestamp: float
    country: str


@dataclass
class CountryActivity:
    event_count: int
    first_ts: float
    last_ts: float

    @property
    def timespan(self) -> float:
        return self.last_ts - self.first_ts


@dataclass
class UserProfile:
    user_id: str
    countries: dict[str, CountryActivity] = field(default_factory=dict)

    def add(self, country: str, ts: float) -> None:
        act = self.countries.get(country)
        if act is None:
            self.countries[country] = CountryActivity(1, ts, ts)
        else:
            act.event_count += 1
            act.first_ts = min(act.first_ts, ts)
            act.last_ts = max(act.last_ts, ts)

    def merge(self, other: "UserProfile") -> None:
        for country, act in other.countries.items():
            mine = self.countries.get(country)
            if mine is None:
                self.countries[country] = CountryActivity(act.event_count, act.first_ts, act.last_ts)
            else:
                mine.event_count += act.event_count
                mine.first_ts = min(mine.first_ts, act.first_ts)
                mine.last_ts = max(mine.last_ts, act.last_ts)

    @property
    def home(self) -> Optional[str]:
        return detect_home(self)


@dataclass(frozen=True)
class AuxNetwork:
    kind: str
    graph: LayerGraph


def _open_rows(source: PathOrLines, report: LoadReport) -> Iterator[tuple[int, list[str]]]:
    if isinstance(source, (str, PathLike)):
        report.source = str(source)
        with open(source, newline="", encoding="utf-8") as fh:
            yield from _iter_csv(fh)
    else:
        yield from _iter_csv(source)


def _iter_csv(lines: Iterable[str]) -> Iterator[tuple[int, list[str]]]:
    for lineno, row in enumerate(csv.reader(lines), start=1):
        if not row or all(not cell.strip() for cell in row):
            continue
        yield lineno, [cell.strip() for cell in row]


def load_registry(source: PathOrLines) -> tuple[CountryRegistry, LoadReport]:
    report = LoadReport()
    rows = []
    seen = set()
    for lineno, row in _open_rows(source, report):
        report.rows += 1
        if len(row) != 4:
            report.skip(lineno, f"expected 4 fields, got {len(row)}")
            continue
        iso, pop, lat, lon = row
        try:
            pop_v, lat_v, lon_v = float(pop), float(lat), float(lon)
        except ValueError:
            report.skip(lineno, "non-numeric population or coordinate")
            continue
        if not 2 <= len(iso) <= 3:
            report.skip(lineno, f"invalid iso code {iso!r}")
        elif iso in seen:
            report.skip(lineno, f"duplicate iso code {iso!r}")
        elif not (math.isfinite(pop_v) and pop_v >= 0 and pop_v == int(pop_v)):
            report.skip(lineno, f"population must be a nonnegative integer, got {pop!r}")
        elif not (-90 <= lat_v <= 90 and -180 <= lon_v <= 180):
            report.skip(lineno, f"centroid ({lat_v}, {lon_v}) out of range")
        else:
            seen.add(iso)
            rows.append((iso, pop_v, lat_v, lon_v))
            report.accepted += 1
    return CountryRegistry.from_rows(rows), report


def read_events(source: PathOrLines, registry: CountryRegistry,
                report: Optional[LoadReport] = None) -> Iterator[EventRecord]:
    """Stream well-formed events; bad rows are recorded in ``report``."""
    report = report if report is not None else LoadReport()
    for lineno, row in _open_rows(source, report):
        report.rows += 1
        if len(row) != 3:
            report.skip(lineno, f"expected 3 fields, got {len(row)}")
            continue
        user, ts, iso = row
        try:
            ts_v = float(ts)
        except ValueError:
            report.skip(lineno, f"bad timestamp {ts!r}")
            continue
        if not math.isfinite(ts_v):
            report.skip(lineno, f"non-finite timestamp {ts!r}")
        elif not user:
            report.skip(lineno, "empty user id")
        elif iso not in registry:
            report.skip(lineno, f"unknown iso code {iso!r}")
        else:
            report.accepted += 1
            yield EventRecord(user, ts_v, iso)


def aggregate_profiles(events: Iterable[EventRecord]) -> dict[str, UserProfile]:
    profiles: dict[str, UserProfile] = {}
    for ev in events:
        prof = profiles.get(ev.user_id)
        if prof is None:
            prof = profiles[ev.user_id] = UserProfile(ev.user_id)
        prof.add(ev.country, ev.timestamp)
    return profiles


def detect_home(profile: UserProfile) -> Optional[str]:
    """Country with most events; ties go to the longest timespan, then the smaller iso code."""
    if not profile.countries:
        return None
    return min(
        profile.countries.items(),
        key=lambda kv: (-kv[1].event_count, -kv[1].timespan, kv[0]),
    )[0]


@dataclass
class ODLayerResult:
    graph: LayerGraph
    users_total: int
    users_resolved: int
    report: LoadReport


def build_od_layer(events: Iterable[EventRecord], registry: CountryRegistry,
                   report: Optional[LoadReport] = None) -> ODLayerResult:
    """Count users from each home country active in each foreign country.

    Every user contributes at most 1 to each edge ``home -> destination``,
    however many events they left there.
    """
    profiles = aggregate_profiles(events)
    counts: dict[tuple[int, int], int] = defaultdict(int)
    resolved = 0
    for user_id in sorted(profiles):
        prof = profiles[user_id]
        home = detect_home(prof)
        if home is None:
            continue
        resolved += 1
        h = registry.index[home]
        for dest in prof.countries:
            if dest != home:
                counts[h, registry.index[dest]] += 1
    n = len(registry)
    graph = LayerGraph.from_edges(n, ((i, j, c) for (i, j), c in counts.items()), loop_free=True)
    return ODLayerResult(graph, len(profiles), resolved, report if report is not None else LoadReport())


def load_events_layer(source: PathOrLines, registry: CountryRegistry) -> ODLayerResult:
    report = LoadReport()
    events = read_events(source, registry, report)
    return build_od_layer(events, registry, report)


def _load_triples(source: PathOrLines, registry: CountryRegistry) -> tuple[LayerGraph, LoadReport]:
    report = LoadReport()
    edges = []
    for lineno, row in _open_rows(source, report):
        report.rows += 1
        if len(row) != 3:
            report.skip(lineno, f"expected 3 fields, got {len(row)}")
            continue
        o, d, value = row
        try:
            v = float(value)
        except ValueError:
            report.skip(lineno, f"non-numeric value {value!r}")
            continue
        if o not in registry or d not in registry:
            bad = o if o not in registry else d
            report.skip(lineno, f"unknown iso code {bad!r}")
        elif not math.isfinite(v) or v < 0:
            report.skip(lineno, f"negative or non-finite value {value!r}")
        else:
            report.accepted += 1
            if o != d:
                edges.append((registry.index[o], registry.index[d], v))
    return LayerGraph.from_edges(len(registry), edges, loop_free=True), report


def load_migration(source: PathOrLines, registry: CountryRegistry) -> tuple[LayerGraph, LoadReport]:
    """Migration stocks as directed weights; duplicate pairs are summed, loops dropped."""
    return _load_triples(source, registry)


def load_aux(kind: str, source: PathOrLines, registry: CountryRegistry) -> tuple[AuxNetwork, LoadReport]:
    """Load a comparison network.

    ``colonial`` and ``language`` are pair lists turned into symmetric 0/1
    graphs; ``trade`` is a directed weighted triple list.
    """
    if kind not in AUX_KINDS:
        raise NetworkError(f"unknown auxiliary network kind {kind!r}; expected one of {AUX_KINDS}")
    if kind == "trade":
        graph, report = _load_triples(source, registry)
        return AuxNetwork(kind, graph), report

    report = LoadReport()
    pairs = set()
    for lineno, row in _open_rows(source, report):
        report.rows += 1
        if len(row) != 2:
            report.skip(lineno, f"expected 2 fields, got {len(row)}")
            continue
        a, b = row
        if a not in registry or b not in registry:
            bad = a if a not in registry else b
            report.skip(lineno, f"unknown iso code {bad!r}")
            continue
        report.accepted += 1
        i, j = registry.index[a], registry.index[b]
        if i != j:
            pairs.add((i, j))
            pairs.add((j, i))
    graph = LayerGraph.from_edges(len(registry), ((i, j, 1.0) for i, j in sorted(pairs)), loop_free=True)
    return AuxNetwork(kind, graph), report


def penetration(layer: LayerGraph, registry: CountryRegistry) -> np.ndarray:
    """Users travelling abroad per million residents; NaN where population is 0."""
    s, _, _ = strengths(layer)
    pop = registry.population
    rates = np.full(len(registry), np.nan)
    ok = pop > 0
    rates[ok] = s[ok] / (pop[ok] / 1e6)
    return rates


def low_penetration_share(rates: np.ndarray, fraction: float = 1e-4) -> float:
    """Share of countries (with defined rate) where fewer than ``fraction`` of residents appear abroad."""
    rates = np.asarray(rates, dtype=float)
    defined = rates[np.isfinite(rates)]
    if defined.size == 0:
        return float("nan")
    return float(np.mean(defined < fraction * 1e6))
