import numpy as np
import pytest

from mobnet import ingest
from mobnet.ingest import (
    CountryActivity,
    EventRecord,
    UserProfile,
    build_od_layer,
    detect_home,
    load_aux,
    load_migration,
    penetration,
)
from mobnet.netcore import CountryRegistry, LayerGraph, NetworkError

from conftest import write_lines

DAY = 86400


def profile(**countries):
    prof = UserProfile("u")
    for iso, (count, span) in countries.items():
        prof.countries[iso] = CountryActivity(count, 0.0, float(span))
    return prof


def events(*rows):
    return [EventRecord(u, float(ts), iso) for u, ts, iso in rows]


class TestDetectHome:
    def test_unique_maximum(self):
        assert detect_home(profile(FR=(5, 0), DE=(3, 0))) == "FR"

    def test_timespan_breaks_count_tie(self):
        assert detect_home(profile(FR=(4, 100 * DAY), DE=(4, 10 * DAY))) == "FR"

    def test_lexicographic_last_resort(self):
        assert detect_home(profile(FR=(2, 5 * DAY), DE=(2, 5 * DAY))) == "DE"

    def test_empty_profile(self):
        assert detect_home(UserProfile("u")) is None

    def test_order_independent(self, rng):
        rows = [("u", float(t), iso) for t, iso in zip(rng.uniform(0, 1e6, 30), rng.choice(["FR", "DE", "IT"], 30))]
        homes = set()
        for _ in range(5):
            rng.shuffle(rows)
            prof = ingest.aggregate_profiles(events(*rows))["u"]
            homes.add(detect_home(prof))
        assert len(homes) == 1

    def test_merge_is_commutative(self):
        a = ingest.aggregate_profiles(events(("u", 1, "FR"), ("u", 9, "DE")))["u"]
        b = ingest.aggregate_profiles(events(("u", 5, "FR"), ("u", 2, "FR")))["u"]
        ab = UserProfile("u"); ab.merge(a); ab.merge(b)
        ba = UserProfile("u"); ba.merge(b); ba.merge(a)
        assert ab.countries == ba.countries
        assert ab.countries["FR"] == CountryActivity(3, 1.0, 5.0)


class TestODLayer:
    def test_one_trip(self, small_registry):
        res = build_od_layer(events(("u1", 0, "FR"), ("u1", 10, "FR"), ("u1", 20, "DE")), small_registry)
        idx = small_registry.index
        assert list(res.graph.edges()) == [(idx["FR"], idx["DE"], 1.0)]

    def test_users_counted_once_per_destination(self, small_registry):
        rows = [
            ("u1", 0, "FR"), ("u1", 1, "FR"), ("u1", 4, "FR"), ("u1", 2, "DE"), ("u1", 3, "DE"),
            ("u2", 0, "FR"), ("u2", 1, "FR"), ("u2", 2, "FR"), ("u2", 5, "DE"), ("u2", 6, "IT"),
        ]
        g = build_od_layer(events(*rows), small_registry).graph
        idx = small_registry.index
        assert g.weight(idx["FR"], idx["DE"]) == 2
        assert g.weight(idx["FR"], idx["IT"]) == 1
        assert g.nnz == 2

    def test_users_not_events(self, small_registry):
        rows = [("u", t, "FR") for t in range(101)]
        for iso in ("DE", "IT", "GB"):
            rows += [("u", 1000 + t, iso) for t in range(100)]
        g = build_od_layer(events(*rows), small_registry).graph
        assert sorted(w for _, _, w in g.edges()) == [1.0, 1.0, 1.0]

    def test_no_loops_and_bounded_by_users(self, small_registry, rng):
        codes = list(small_registry.codes)
        rows = [(f"u{rng.integers(40)}", float(t), codes[rng.integers(len(codes))]) for t in range(800)]
        res = build_od_layer(events(*rows), small_registry)
        g = res.graph
        assert g.loop_free and not g.toarray().diagonal().any()
        homes = {}
        for uid, prof in ingest.aggregate_profiles(events(*rows)).items():
            homes[uid] = detect_home(prof)
        per_home = np.zeros(len(codes))
        for h in homes.values():
            per_home[small_registry.index[h]] += 1
        assert np.all(g.toarray() <= per_home[:, None])

    def test_malformed_rows_reported(self, tmp_path, small_registry):
        path = tmp_path / "events.csv"
        path.write_text("u1,0,FR\nu1,notatime,FR\nu1,5,ZZ\nu1,6\nu1,10,DE\n", encoding="utf-8")
        res = ingest.load_events_layer(path, small_registry)
        assert res.report.rows == 5
        assert res.report.accepted == 2 and res.report.skipped == 3
        assert res.report.accepted + res.report.skipped == res.report.rows
        assert any(":2:" in msg for msg in res.report.problems)
        assert any(":3:" in msg and "ZZ" in msg for msg in res.report.problems)
        assert res.users_resolved == 1


class TestTables:
    def test_migration_rows(self, tmp_path, small_registry):
        path = write_lines(tmp_path / "m.csv", [("MX", "US", 60), ("MX", "US", 40), ("US", "US", 5)])
        g, report = load_migration(path, small_registry)
        idx = small_registry.index
        assert g.weight(idx["MX"], idx["US"]) == 100
        assert g.nnz == 1 and g.loop_free
        assert report.accepted == 3 and report.skipped == 0

    def test_migration_rejects(self, tmp_path, small_registry):
        path = write_lines(tmp_path / "m.csv", [("MX", "US", -3), ("XX", "US", 4), ("MX", "US", 1)])
        g, report = load_migration(path, small_registry)
        assert report.skipped == 2 and report.accepted == 1
        assert report.rows == report.accepted + report.skipped

    def test_colonial_symmetrized(self, tmp_path, small_registry):
        path = write_lines(tmp_path / "c.csv", [("GB", "IN")])
        aux, _ = load_aux("colonial", path, small_registry)
        w = aux.graph.toarray()
        i, j = small_registry.index["GB"], small_registry.index["IN"]
        assert w[i, j] == w[j, i] == 1
        assert np.array_equal(w, w.T)

    def test_language_duplicates_idempotent(self, tmp_path, small_registry):
        path = write_lines(tmp_path / "l.csv", [("US", "GB"), ("GB", "US"), ("US", "GB")])
        aux, report = load_aux("language", path, small_registry)
        assert set(aux.graph.matrix.data.tolist()) == {1.0}
        assert aux.graph.nnz == 2 and report.accepted == 3

    def test_trade_directed(self, tmp_path, small_registry):
        path = write_lines(tmp_path / "t.csv", [("US", "CN", 1e9)])
        aux, _ = load_aux("trade", path, small_registry)
        idx = small_registry.index
        assert list(aux.graph.edges()) == [(idx["US"], idx["CN"], 1e9)]

    def test_unknown_kind(self, small_registry):
        with pytest.raises(NetworkError):
            load_aux("religion", [], small_registry)

    def test_registry_loader(self, tmp_path):
        path = tmp_path / "r.csv"
        path.write_text("FR,67000000,46.6,2.2\nDE,x,1,1\nFR,1,0,0\nIT,59000000,42.8,12.6\nQQ,5,100,0\n")
        reg, report = ingest.load_registry(path)
        assert reg.codes == ("FR", "IT")
        assert report.skipped == 3 and report.rows == 5


class TestPenetration:
    def reg(self, pops):
        return CountryRegistry.from_rows([(f"C{i}", p, 0.0, float(i)) for i, p in enumerate(pops)])

    def test_zero_outflow(self):
        rates = penetration(LayerGraph.empty(2), self.reg([1e6, 1e6]))
        assert rates.tolist() == [0.0, 0.0]

    def test_per_million(self):
        g = LayerGraph.from_edges(2, [(0, 1, 50)], loop_free=True)
        assert penetration(g, self.reg([5_000_000, 10]))[0] == pytest.approx(10.0)

    def test_zero_population_undefined(self):
        g = LayerGraph.from_edges(2, [(0, 1, 50)], loop_free=True)
        assert np.isnan(penetration(g, self.reg([0, 10]))[0])

    def test_low_share(self):
        # 0.01% of population is 100 per million
        assert ingest.low_penetration_share(np.array([50.0, 99.0, 100.0, 500.0, np.nan])) == 0.5
