import math
import warnings

import numpy as np
import pytest

from mobnet import flowmodels as fm
from mobnet.netcore import CountryRegistry, LayerGraph, NetworkError, strengths
from mobnet.synthetic import gravity_network, random_registry


def reg(pops, coords=None):
    coords = coords or [(0.0, float(i)) for i in range(len(pops))]
    return CountryRegistry.from_rows([(f"C{i:02d}", p, la, lo) for i, (p, (la, lo)) in enumerate(zip(pops, coords))])


def brute_sij(d, pop, i, j):
    return sum(pop[k] for k in range(len(pop)) if k not in (i, j) and d[i, k] < d[i, j])


class TestHaversine:
    def test_identical(self):
        d = fm.haversine_matrix(reg([1, 1], [(10, 20), (10, 20)])).d
        assert d[0, 1] == 0

    def test_antipodal(self):
        d = fm.haversine_matrix(reg([1, 1], [(0, 0), (0, 180)])).d
        assert d[0, 1] == pytest.approx(math.pi * 6371, rel=1e-12)
        assert d[0, 1] == pytest.approx(20015.1, abs=0.05)

    def test_quarter(self):
        d = fm.haversine_matrix(reg([1, 1], [(0, 0), (0, 90)])).d
        assert d[0, 1] == pytest.approx(10007.5, abs=0.05)

    def test_symmetric_zero_diagonal(self, rng):
        d = fm.haversine_matrix(random_registry(30, rng)).d
        assert np.array_equal(d, d.T) and not d.diagonal().any() and np.all(d >= 0)


class TestGravity:
    def test_distance_free(self):
        r = reg([10, 20, 30])
        d = np.array([[0, 1, 2], [1, 0, 3], [2, 3, 0]], float)
        w = fm.gravity_predict([1, 2, 3], r, d, fm.GravityParams(0.0, 0.0)).toarray()
        expect = np.outer([1, 2, 3], [10, 20, 30]).astype(float)
        np.fill_diagonal(expect, 0)
        assert np.allclose(w, expect, rtol=1e-14)

    def test_hand_arithmetic(self):
        r = reg([1, 1e6])
        d = np.array([[0, 1000], [1000, 0]], float)
        w = fm.gravity_predict([100, 0], r, d, fm.GravityParams(1.0, math.log(1e-4)))
        assert w.weight(0, 1) == pytest.approx(10, rel=1e-12)

    def test_equidistant_equal_pop(self):
        r = reg([5, 7, 7])
        d = np.array([[0, 4, 4], [4, 0, 1], [4, 1, 0]], float)
        w = fm.gravity_predict([3, 3, 3], r, d, fm.GravityParams(1.3, 0.2))
        assert w.weight(0, 1) == pytest.approx(w.weight(0, 2), rel=1e-14)

    def test_zero_distance_named(self):
        r = reg([1, 1, 1])
        d = np.array([[0, 0, 1], [0, 0, 1], [1, 1, 0]], float)
        with pytest.raises(NetworkError, match="C00 and C01"):
            fm.gravity_predict([1, 1, 1], r, d, fm.GravityParams(1, 0))

    def test_permutation_equivariant(self, rng):
        r = random_registry(15, rng)
        d = fm.haversine_matrix(r).d
        s = rng.uniform(1, 10, 15)
        p = rng.permutation(15)
        base = fm.gravity_predict(s, r, d, fm.GravityParams(1.7, -3)).toarray()
        perm = fm.gravity_predict(s[p], r.subset(p), d[np.ix_(p, p)], fm.GravityParams(1.7, -3)).toarray()
        assert np.allclose(perm, base[np.ix_(p, p)], rtol=1e-13)


class TestLocalGravity:
    def test_conserves_outflow(self, rng):
        r = random_registry(40, rng)
        d = fm.haversine_matrix(r)
        s = rng.uniform(0, 100, 40)
        for alpha in (0.0, 0.7, 2.0, 6.0):
            w = fm.local_gravity_predict(s, r, d, alpha).toarray()
            assert np.allclose(w.sum(axis=1), s, rtol=1e-9)

    def test_alpha_zero(self):
        r = reg([3, 1, 2, 5])
        d = np.ones((4, 4)) + np.arange(16).reshape(4, 4)
        d = d + d.T
        np.fill_diagonal(d, 0)
        w = fm.local_gravity_predict([1, 2, 3, 4], r, d, 0.0).toarray()
        pop = np.array([3, 1, 2, 5.0])
        for i in range(4):
            others = pop.sum() - pop[i]
            for j in range(4):
                if i != j:
                    assert w[i, j] == pytest.approx((i + 1) * pop[j] / others, rel=1e-12)

    def test_two_destinations(self):
        r = reg([50, 1e6, 1e6])
        d = np.array([[0, 1000, 2000], [1000, 0, 1500], [2000, 1500, 0]], float)
        w = fm.local_gravity_predict([9, 0, 0], r, d, 1.0)
        assert w.weight(0, 1) == pytest.approx(6, rel=1e-12)
        assert w.weight(0, 2) == pytest.approx(3, rel=1e-12)


class TestRadiation:
    def test_nearest_neighbour(self):
        d = np.array([[0, 1, 2], [1, 0, 1], [2, 1, 0]], float)
        assert fm.radiation_sij(d, reg([1, 2, 4]), 0, 1) == 0

    def test_collinear(self):
        d = np.array([[0, 1, 2], [1, 0, 1], [2, 1, 0]], float)
        assert fm.radiation_sij(d, reg([1, 2, 4]), 0, 2) == 2

    def test_matrix_matches_brute_force_and_monotone(self, rng):
        r = random_registry(25, rng)
        d = fm.haversine_matrix(r).d
        sij = fm.intervening_population(d, r)
        pop = r.population
        for i in range(25):
            for j in range(25):
                if i != j:
                    assert sij[i, j] == brute_sij(d, pop, i, j) == fm.radiation_sij(d, r, i, j)
            order = np.argsort(d[i])
            assert np.all(np.diff(sij[i, order[1:]]) >= 0)

    def test_ties_excluded(self):
        d = np.array([[0, 1, 1, 2], [1, 0, 1, 1], [1, 1, 0, 1], [2, 1, 1, 0]], float)
        r = reg([1, 2, 4, 8])
        assert fm.radiation_sij(d, r, 0, 1) == 0
        assert fm.radiation_sij(d, r, 0, 3) == 6

    def test_two_country_world(self):
        r = reg([3, 5])
        d = np.array([[0, 7], [7, 0]], float)
        w = fm.radiation_predict([11, 4], r, d)
        assert w.weight(0, 1) == pytest.approx(11, rel=1e-14)
        assert w.weight(1, 0) == pytest.approx(4, rel=1e-14)

    def test_three_unit_countries(self):
        r = reg([1, 1, 1])
        d = np.array([[0, 1, 2], [1, 0, 1.5], [2, 1.5, 0]], float)
        w = fm.radiation_predict([8, 0, 0], r, d)
        assert w.weight(0, 1) == pytest.approx(8 * 0.75, rel=1e-14)
        assert w.weight(0, 2) == pytest.approx(8 * 0.25, rel=1e-14)

    def test_everyone_in_one_country(self):
        r = reg([0, 5])
        with pytest.raises(NetworkError):
            fm.radiation_predict([1, 1], r, np.array([[0, 1], [1, 0]], float))

    def test_telescoping_identity(self, rng):
        for _ in range(20):
            n = int(rng.integers(3, 40))
            r = random_registry(n, rng)
            d = fm.haversine_matrix(r).d
            sij = fm.intervening_population(d, r)
            pop = r.population
            for i in range(n):
                js = [j for j in range(n) if j != i]
                total = sum(pop[i] * pop[j] / ((pop[i] + sij[i, j]) * (pop[i] + pop[j] + sij[i, j])) for j in js)
                assert total == pytest.approx(1 - pop[i] / pop.sum(), rel=1e-9)


class TestR2:
    def test_perfect(self):
        g = LayerGraph.from_edges(3, [(0, 1, 2), (1, 2, 5), (2, 0, 9)], loop_free=True)
        assert fm.r2_log(g, g) == 1

    def test_geometric_mean_is_zero(self):
        obs = LayerGraph.from_edges(3, [(0, 1, 2), (1, 2, 8), (2, 0, 32)], loop_free=True)
        pred = LayerGraph.from_edges(3, [(0, 1, 8), (1, 2, 8), (2, 0, 8)], loop_free=True)
        assert fm.r2_log(obs, pred) == pytest.approx(0, abs=1e-14)

    def test_hand_case(self):
        obs = LayerGraph.from_edges(2, [(0, 1, 1), (1, 0, math.e ** 2)], loop_free=True)
        pred = LayerGraph.from_edges(2, [(0, 1, 1), (1, 0, math.e)], loop_free=True)
        assert fm.r2_log(obs, pred) == pytest.approx(0.5, rel=1e-14)

    def test_too_few(self):
        g = LayerGraph.from_edges(2, [(0, 1, 1)], loop_free=True)
        with pytest.raises(NetworkError):
            fm.r2_log(g, g)


def synthetic(n, alpha, logC, rng, noise=0.0):
    r = random_registry(n, rng)
    d = fm.haversine_matrix(r)
    s = rng.uniform(1e2, 1e5, n)
    return r, d, s, gravity_network(r, s, alpha, logC, d, noise, rng)


class TestFitGravity:
    def test_noiseless(self, rng):
        r, d, s, g = synthetic(60, 2.0, math.log(1e-6), rng)
        fit = fm.fit_gravity(g, s, r, d)
        assert fit.alpha == pytest.approx(2.0, abs=1e-9)
        assert fit.logC == pytest.approx(math.log(1e-6), abs=1e-8)
        assert fit.r2_log == pytest.approx(1, abs=1e-9)
        assert fit.n_links_used == 60 * 59

    def test_noisy(self, rng):
        errs = []
        for _ in range(5):
            r, d, s, g = synthetic(100, 1.5, -2.0, rng, noise=0.3)
            errs.append(abs(fm.fit_gravity(g, s, r, d).alpha - 1.5))
        assert max(errs) < 0.05

    def test_monotone_recovery(self, rng):
        fitted = []
        for alpha in (1.0, 1.5, 2.0, 2.5):
            r, d, s, g = synthetic(80, alpha, -1.0, rng, noise=0.3)
            fitted.append(fm.fit_gravity(g, s, r, d).alpha)
        assert fitted == sorted(fitted)

    def test_degenerate_design(self):
        r = reg([1, 1, 1])
        d = np.ones((3, 3)) - np.eye(3)
        g = LayerGraph(np.ones((3, 3)) - np.eye(3), loop_free=True)
        with pytest.raises(NetworkError, match="degenerate"):
            fm.fit_gravity(g, [2, 2, 2], r, d)

    def test_too_few_links(self):
        r = reg([1, 1, 1])
        g = LayerGraph.from_edges(3, [(0, 1, 1), (1, 2, 1)], loop_free=True)
        with pytest.raises(NetworkError):
            fm.fit_gravity(g, [1, 1, 0], r, np.ones((3, 3)))

    def test_json(self, rng):
        r, d, s, g = synthetic(10, 1.0, 0.0, rng)
        js = fm.fit_gravity(g, s, r, d).to_json()
        assert set(js) == {"model", "alpha", "logC", "r2_log", "n_links"}


class TestFitLocalGravity:
    def test_noiseless(self, rng):
        r = random_registry(50, rng)
        d = fm.haversine_matrix(r)
        s = rng.uniform(10, 1000, 50)
        g = fm.local_gravity_predict(s, r, d, 1.5)
        fit = fm.fit_local_gravity(g, s, r, d)
        assert fit.alpha == pytest.approx(1.5, abs=1e-4)
        assert fit.r2_log == pytest.approx(1, abs=1e-9)
        assert fit.logC is None

    def test_local_optimality(self, rng):
        r, d, s, g = synthetic(60, 1.8, 0.0, rng, noise=0.5)
        fit = fm.fit_local_gravity(g, s, r, d)
        f = lambda a: fm.local_gravity_sse(g, s, r, d, a)
        assert f(fit.alpha) <= f(fit.alpha - 0.01)
        assert f(fit.alpha) <= f(fit.alpha + 0.01)

    def test_boundary_warning(self, rng):
        r = random_registry(30, rng)
        d = fm.haversine_matrix(r)
        s = rng.uniform(10, 1000, 30)
        g = fm.local_gravity_predict(s, r, d, 1.0)
        with pytest.warns(UserWarning, match="boundary"):
            fm.fit_local_gravity(g, s, r, d, bracket=(2.0, 3.0))

    def test_golden_section(self):
        x = fm.golden_section(lambda a: (a - 3.3) ** 2, 0, 10, 1e-8)
        assert x == pytest.approx(3.3, abs=1e-7)


def test_radiation_report(rng):
    r, d, s, g = synthetic(30, 1.0, 0.0, rng, noise=0.2)
    rep = fm.evaluate_radiation(g, s, r, d)
    assert rep.model == "radiation" and rep.alpha is None and rep.r2_log <= 1
