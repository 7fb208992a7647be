"""Gravity and radiation flux models, their fitting and log-scale goodness of fit."""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass
from typing import Optional

import numpy as np
from scipy.special import logsumexp

from .netcore import CountryRegistry, LayerGraph, NetworkError

EARTH_RADIUS_KM = 6371.0
GOLDEN_BRACKET = (0.0, 10.0)
GOLDEN_TOL = 1e-6


@dataclass(frozen=True)
class DistanceMatrix:
    d: np.ndarray

    def __post_init__(self):
        d = np.asarray(self.d, dtype=float)
        if d.ndim != 2 or d.shape[0] != d.shape[1]:
            raise NetworkError("distance matrix must be square")
        d.setflags(write=False)
        object.__setattr__(self, "d", d)

    @property
    def n(self) -> int:
        return self.d.shape[0]


def _dist(dist) -> np.ndarray:
    return dist.d if isinstance(dist, DistanceMatrix) else np.asarray(dist, dtype=float)


def haversine_matrix(registry: CountryRegistry, radius: float = EARTH_RADIUS_KM) -> DistanceMatrix:
    """Great-circle distances in km between registry centroids."""
    lat = np.radians(registry.lat)
    lon = np.radians(registry.lon)
    dlat = lat[:, None] - lat[None, :]
    dlon = lon[:, None] - lon[None, :]
    h = np.sin(dlat / 2) ** 2 + np.cos(lat)[:, None] * np.cos(lat)[None, :] * np.sin(dlon / 2) ** 2
    d = 2 * radius * np.arcsin(np.sqrt(np.clip(h, 0.0, 1.0)))
    d = (d + d.T) / 2
    np.fill_diagonal(d, 0.0)
    return DistanceMatrix(d)


@dataclass(frozen=True)
class GravityParams:
    alpha: float
    logC: Optional[float] = None


@dataclass(frozen=True)
class FitReport:
    model: str
    params: Optional[GravityParams]
    r2_log: float
    n_links_used: int

    @property
    def alpha(self) -> Optional[float]:
        return None if self.params is None else self.params.alpha

    @property
    def logC(self) -> Optional[float]:
        return None if self.params is None else self.params.logC

    def to_json(self) -> dict:
        return {
            "model": self.model,
            "alpha": self.alpha,
            "logC": self.logC,
            "r2_log": self.r2_log,
            "n_links": self.n_links_used,
        }


def _check_distances(d: np.ndarray, registry: CountryRegistry) -> None:
    off = ~np.eye(d.shape[0], dtype=bool)
    bad = np.argwhere(off & ~(d > 0))
    if bad.size:
        i, j = bad[0]
        raise NetworkError(
            f"zero distance between distinct countries {registry.codes[i]} and {registry.codes[j]}"
        )


def _log_kernel(registry: CountryRegistry, d: np.ndarray, alpha: float) -> np.ndarray:
    """``ln(pop_j) - alpha * ln(d_ij)`` with the diagonal masked to -inf."""
    n = d.shape[0]
    with np.errstate(divide="ignore"):
        logd = np.log(np.where(np.eye(n, dtype=bool), 1.0, d))
        logpop = np.log(registry.population)
    k = logpop[None, :] - alpha * logd
    np.fill_diagonal(k, -np.inf)
    return k


def gravity_predict(s_out, registry: CountryRegistry, dist, params: GravityParams) -> LayerGraph:
    """``C * s_i * pop_j / d_ij**alpha`` for every ordered pair i != j."""
    d = _dist(dist)
    _check_distances(d, registry)
    if params.logC is None:
        raise NetworkError("global gravity model needs a normalization constant")
    s = np.asarray(s_out, dtype=float)
    with np.errstate(divide="ignore"):
        logs = np.log(s)
    w = np.exp(params.logC + logs[:, None] + _log_kernel(registry, d, params.alpha))
    return LayerGraph(w, loop_free=True)


def _local_log_prediction(logs: np.ndarray, registry: CountryRegistry, d: np.ndarray, alpha: float) -> np.ndarray:
    k = _log_kernel(registry, d, alpha)
    return logs[:, None] + k - logsumexp(k, axis=1, keepdims=True)


def local_gravity_predict(s_out, registry: CountryRegistry, dist, alpha: float) -> LayerGraph:
    """Gravity normalized per origin so each row sums to ``s_i``."""
    d = _dist(dist)
    _check_distances(d, registry)
    s = np.asarray(s_out, dtype=float)
    with np.errstate(divide="ignore"):
        logs = np.log(s)
    return LayerGraph(np.exp(_local_log_prediction(logs, registry, d, alpha)), loop_free=True)


def intervening_population(dist, registry: CountryRegistry) -> np.ndarray:
    """Matrix of ``s_ij``: population strictly closer to ``i`` than ``j`` is, excluding ``i`` and ``j``."""
    d = _dist(dist)
    pop = registry.population
    n = d.shape[0]
    out = np.zeros((n, n))
    for i in range(n):
        others = np.delete(np.arange(n), i)
        row = d[i, others]
        order = np.argsort(row, kind="stable")
        sorted_d = row[order]
        cum = np.concatenate(([0.0], np.cumsum(pop[others][order])))
        out[i, others] = cum[np.searchsorted(sorted_d, row, side="left")]
    return out


def radiation_sij(dist, registry: CountryRegistry, i: int, j: int) -> float:
    if i == j:
        raise NetworkError("s_ij is defined for distinct countries only")
    d = _dist(dist)
    mask = d[i] < d[i, j]
    mask[[i, j]] = False
    return float(registry.population[mask].sum())


def radiation_predict(s_out, registry: CountryRegistry, dist) -> LayerGraph:
    """Radiation model with the finite-system normalization ``1 / (1 - pop_i / sum(pop))``."""
    pop = registry.population
    if np.any(pop <= 0):
        raise NetworkError("radiation model requires strictly positive populations")
    total = pop.sum()
    whole = np.flatnonzero(pop >= total)
    if whole.size:
        raise NetworkError(f"country {registry.codes[whole[0]]} holds the entire population")
    s = np.asarray(s_out, dtype=float)
    sij = intervening_population(dist, registry)
    pi = pop[:, None]
    pj = pop[None, :]
    w = (s / (1.0 - pop / total))[:, None] * pi * pj / ((pi + sij) * (pi + pj + sij))
    np.fill_diagonal(w, 0.0)
    return LayerGraph(w, loop_free=True)


def r2_log(observed: LayerGraph, predicted: LayerGraph) -> float:
    """Coefficient of determination of ``ln w_pred`` for ``ln w_obs`` on links positive in both."""
    y, yhat = _common_logs(observed, predicted)
    if y.size < 2:
        raise NetworkError("r2_log needs at least 2 links positive in both graphs")
    sst = np.sum((y - y.mean()) ** 2)
    sse = np.sum((y - yhat) ** 2)
    if sst == 0:
        return 1.0 if sse == 0 else -math.inf
    return float(1.0 - sse / sst)


def _common_logs(observed: LayerGraph, predicted: LayerGraph):
    obs = observed.matrix.tocoo()
    pred = np.asarray(predicted.matrix[obs.row, obs.col]).reshape(-1)
    keep = (obs.data > 0) & (pred > 0)
    return np.log(obs.data[keep]), np.log(pred[keep])


def _observed_links(observed: LayerGraph, s: np.ndarray, registry: CountryRegistry):
    obs = observed.matrix.tocoo()
    keep = (obs.data > 0) & (obs.row != obs.col) & (s[obs.row] > 0) & (registry.population[obs.col] > 0)
    if keep.sum() < 3:
        raise NetworkError("fitting needs at least 3 positive observed links")
    return obs.row[keep], obs.col[keep], obs.data[keep]


def fit_gravity(observed: LayerGraph, s_out, registry: CountryRegistry, dist) -> FitReport:
    """Ordinary least squares of the global gravity model in log space.

    Regresses ``ln w - ln(s_i pop_j)`` on ``-ln d_ij``: the slope is alpha and
    the intercept ln C.
    """
    d = _dist(dist)
    s = np.asarray(s_out, dtype=float)
    rows, cols, w = _observed_links(observed, s, registry)
    dij = d[rows, cols]
    if np.any(dij <= 0):
        k = int(np.flatnonzero(dij <= 0)[0])
        raise NetworkError(
            f"zero distance between distinct countries {registry.codes[rows[k]]} and {registry.codes[cols[k]]}"
        )
    x = -np.log(dij)
    if np.ptp(x) == 0:
        raise NetworkError("degenerate design: all observed links have the same distance")
    y = np.log(w) - np.log(s[rows]) - np.log(registry.population[cols])
    design = np.column_stack([np.ones_like(x), x])
    (logC, alpha), *_ = np.linalg.lstsq(design, y, rcond=None)
    params = GravityParams(float(alpha), float(logC))
    predicted = gravity_predict(s, registry, d, params)
    return FitReport("gravity", params, r2_log(observed, predicted), int(rows.size))


def golden_section(f, lo: float, hi: float, tol: float = GOLDEN_TOL) -> float:
    """Minimize a unimodal ``f`` on ``[lo, hi]``; returns the bracket midpoint at width ``tol``."""
    invphi = (math.sqrt(5) - 1) / 2
    a, b = lo, hi
    c = b - invphi * (b - a)
    e = a + invphi * (b - a)
    fc, fe = f(c), f(e)
    while b - a > tol:
        if fc <= fe:
            b, e, fe = e, c, fc
            c = b - invphi * (b - a)
            fc = f(c)
        else:
            a, c, fc = c, e, fe
            e = a + invphi * (b - a)
            fe = f(e)
    return (a + b) / 2


def local_gravity_sse(observed: LayerGraph, s_out, registry: CountryRegistry, dist, alpha: float) -> float:
    d = _dist(dist)
    s = np.asarray(s_out, dtype=float)
    rows, cols, w = _observed_links(observed, s, registry)
    with np.errstate(divide="ignore"):
        logs = np.log(s)
    pred = _local_log_prediction(logs, registry, d, alpha)[rows, cols]
    return float(np.sum((np.log(w) - pred) ** 2))


def fit_local_gravity(observed: LayerGraph, s_out, registry: CountryRegistry, dist,
                      bracket: tuple[float, float] = GOLDEN_BRACKET, tol: float = GOLDEN_TOL) -> FitReport:
    d = _dist(dist)
    _check_distances(d, registry)
    s = np.asarray(s_out, dtype=float)
    rows, cols, w = _observed_links(observed, s, registry)
    logw = np.log(w)
    with np.errstate(divide="ignore"):
        logs = np.log(s)

    def sse(alpha):
        pred = _local_log_prediction(logs, registry, d, alpha)[rows, cols]
        return float(np.sum((logw - pred) ** 2))

    alpha = golden_section(sse, *bracket, tol=tol)
    if alpha - bracket[0] < 10 * tol or bracket[1] - alpha < 10 * tol:
        warnings.warn(f"locally-normalized gravity optimum alpha={alpha:.6g} is at the search bracket boundary")
    predicted = local_gravity_predict(s, registry, d, alpha)
    return FitReport("local_gravity", GravityParams(float(alpha)), r2_log(observed, predicted), int(rows.size))


def evaluate_radiation(observed: LayerGraph, s_out, registry: CountryRegistry, dist) -> FitReport:
    predicted = radiation_predict(s_out, registry, dist)
    y, _ = _common_logs(observed, predicted)
    return FitReport("radiation", None, r2_log(observed, predicted), int(y.size))
