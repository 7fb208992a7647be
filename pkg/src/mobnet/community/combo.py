"""Combo-style modularity maximization.

The search starts from a single community.  Each iteration evaluates, for
every ordered pair of communities ``(A, B)`` including ``B`` = a fresh empty
community, the best subset of ``A`` to move into ``B``.  The subset is
found by a Kernighan-Lin style sequence: nodes of ``A`` are shifted one at a
time, always taking the currently best single-node gain even when it is
negative, and the best prefix of the sequence is kept.  Shifting a whole
community into another is a merge, shifting part of it into an empty one is a
split.  The best redistribution over all pairs is applied, and the loop stops
when no redistribution improves the score by more than ``tol``.

Pair results are cached and recomputed only for pairs touching a community
that changed in the last step.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np

from ..netcore import Partition
from .modularity import Layers, as_layers, multilayer_matrix

NEW = -1

MoveCallback = Callable[[np.ndarray, float], None]


@dataclass(frozen=True)
class ComboResult:
    partition: Partition
    Q: float
    iterations: int

    def __iter__(self):
        yield self.partition
        yield self.Q


@dataclass(frozen=True)
class _Shift:
    gain: float
    forward: np.ndarray
    backward: np.ndarray


_NO_SHIFT = _Shift(-np.inf, np.zeros(0, dtype=np.int64), np.zeros(0, dtype=np.int64))


def _one_way(S: np.ndarray, K: np.ndarray, members: np.ndarray, src: int, dst: int) -> _Shift:
    """Best prefix of the greedy single-node shift sequence from ``src`` to ``dst``."""
    size = members.size
    to_empty = dst == NEW
    if size == 0 or (to_empty and size == 1):
        return _NO_SHIFT
    gain = (0.0 if to_empty else K[members, dst]) - K[members, src]
    gain = np.array(gain, dtype=float)
    active = np.ones(size, dtype=bool)
    sequence = np.empty(size, dtype=np.int64)
    # shifting everything into an empty community only relabels it
    limit = size - 1 if to_empty else size
    total, best_total, best_len = 0.0, -np.inf, 0
    sub = S[np.ix_(members, members)]
    for step in range(limit):
        k = int(np.argmax(np.where(active, gain, -np.inf)))
        total += gain[k]
        active[k] = False
        sequence[step] = k
        if total > best_total:
            best_total, best_len = total, step + 1
        gain += 2.0 * sub[:, k]
    return _Shift(best_total, members[sequence[:best_len]], members[:0])


def _two_way(S: np.ndarray, K: np.ndarray, src_members: np.ndarray, dst_members: np.ndarray,
             src: int, dst: int) -> _Shift:
    """Kernighan-Lin exchange between two existing communities.

    Every node of either community may switch side once; the best prefix of
    the greedy sequence is kept.
    """
    nodes = np.concatenate([src_members, dst_members])
    size = nodes.size
    in_src = np.zeros(size, dtype=bool)
    in_src[:src_members.size] = True
    gain = np.where(in_src, K[nodes, dst] - K[nodes, src], K[nodes, src] - K[nodes, dst])
    active = np.ones(size, dtype=bool)
    sequence = np.empty(size, dtype=np.int64)
    total, best_total, best_len = 0.0, -np.inf, 0
    sub = S[np.ix_(nodes, nodes)]
    for step in range(size):
        k = int(np.argmax(np.where(active, gain, -np.inf)))
        total += gain[k]
        active[k] = False
        sequence[step] = k
        if total > best_total:
            best_total, best_len = total, step + 1
        # nodes on k's old side gain from following it, the others lose
        same = in_src == in_src[k]
        gain += np.where(same, 2.0, -2.0) * sub[:, k]
        in_src[k] = ~in_src[k]
    picked = sequence[:best_len]
    from_src = picked[picked < src_members.size]
    from_dst = picked[picked >= src_members.size]
    return _Shift(best_total, nodes[from_src], nodes[from_dst])


def _kl_refine(sub: np.ndarray, side: np.ndarray, tol: float, max_passes: int = 20) -> np.ndarray:
    """Kernighan-Lin passes on a two-way split of one community (``side`` is boolean)."""
    side = side.copy()
    size = side.size
    for _ in range(max_passes):
        sign = np.where(side, 1.0, -1.0)
        # gain of switching u: same-side weight lost, other-side weight gained
        gain = -(sub @ sign) * sign
        active = np.ones(size, dtype=bool)
        trial = side.copy()
        total, best_total, best_len = 0.0, 0.0, 0
        sequence = np.empty(size, dtype=np.int64)
        for step in range(size):
            k = int(np.argmax(np.where(active, gain, -np.inf)))
            total += gain[k]
            active[k] = False
            sequence[step] = k
            if total > best_total + tol:
                best_total, best_len = total, step + 1
            same = trial == trial[k]
            gain += np.where(same, 2.0, -2.0) * sub[:, k]
            trial[k] = ~trial[k]
        if best_len == 0:
            break
        side[sequence[:best_len]] = ~side[sequence[:best_len]]
    return side


def _spectral_split(S: np.ndarray, members: np.ndarray, tol: float) -> _Shift:
    """Split one community by the leading eigenvector of its modularity submatrix, then KL-refine."""
    if members.size < 2:
        return _NO_SHIFT
    sub = S[np.ix_(members, members)]
    gen = sub - np.diag(sub.sum(axis=1))
    _, vecs = np.linalg.eigh(gen)
    side = vecs[:, -1] > 0
    side = _kl_refine(sub, side, tol)
    # the first member (in visit order) always stays
    moving = side != side[0]
    if not moving.any():
        return _NO_SHIFT
    gain = -float(np.sum(sub[np.ix_(moving, ~moving)]))
    return _Shift(gain, members[moving], members[:0])


class ComboOptimizer:
    """Stateful optimizer over a modularity matrix ``B`` (``Q = sum_ij B_ij [C_i == C_j]``)."""

    def __init__(self, B: np.ndarray, seed: Optional[int] = 0, tol: float = 1e-9,
                 callback: Optional[MoveCallback] = None, two_way: bool = True):
        B = np.asarray(B, dtype=float)
        self.n = B.shape[0]
        self.S = B + B.T
        np.fill_diagonal(self.S, 0.0)
        self.tol = tol
        self.callback = callback
        self.two_way = two_way
        rng = np.random.default_rng(seed)
        # visit order: ties between equal gains go to the earliest node in this order
        self.order = rng.permutation(self.n)
        self.rank = np.empty(self.n, dtype=np.int64)
        self.rank[self.order] = np.arange(self.n)
        self.labels = np.zeros(self.n, dtype=np.int64)
        self.K = self.S.sum(axis=1, keepdims=True)
        self.Q = float(np.sum(B))
        self.communities = [0] if self.n else []
        self._cache: dict[tuple[int, int], _Shift] = {}

    def members(self, c: int) -> np.ndarray:
        nodes = np.flatnonzero(self.labels == c)
        return nodes[np.argsort(self.rank[nodes], kind="stable")]

    def _candidates(self):
        for src in self.communities:
            members = None
            for dst in self.communities + [NEW]:
                if dst == src:
                    continue
                key = (src, dst)
                if key not in self._cache:
                    if members is None:
                        members = self.members(src)
                    shift = _one_way(self.S, self.K, members, src, dst)
                    if dst == NEW:
                        split = _spectral_split(self.S, members, self.tol)
                        if split.gain > shift.gain:
                            shift = split
                    elif self.two_way:
                        exchange = _two_way(self.S, self.K, members, self.members(dst), src, dst)
                        if exchange.gain > shift.gain:
                            shift = exchange
                    self._cache[key] = shift
                yield key, self._cache[key]

    def step(self) -> bool:
        best_key, best = None, None
        for key, shift in self._candidates():
            if best is None or shift.gain > best.gain:
                best_key, best = key, shift
        if best is None or not best.gain > self.tol:
            return False
        self._apply(best_key, best)
        return True

    def _apply(self, key: tuple[int, int], shift: _Shift) -> None:
        src, dst = key
        if dst == NEW:
            dst = self.K.shape[1]
            self.K = np.hstack([self.K, np.zeros((self.n, 1))])
            self.communities.append(dst)
        delta = self.S[:, shift.forward].sum(axis=1) - self.S[:, shift.backward].sum(axis=1)
        self.K[:, src] -= delta
        self.K[:, dst] += delta
        self.labels[shift.forward] = dst
        self.labels[shift.backward] = src
        self.Q += shift.gain
        stale = {src, dst}
        if not np.any(self.labels == src):
            self.communities.remove(src)
        self._cache = {k: v for k, v in self._cache.items()
                       if k[0] not in stale and k[1] not in stale}
        if self.callback is not None:
            self.callback(self.labels.copy(), self.Q)

    def converge(self, max_iter: Optional[int] = None) -> int:
        it = 0
        while max_iter is None or it < max_iter:
            if not self.step():
                break
            it += 1
        return it

    def snapshot(self):
        return (self.labels.copy(), self.K.copy(), self.Q, list(self.communities), dict(self._cache))

    def restore(self, state) -> None:
        labels, K, Q, communities, cache = state
        self.labels, self.K, self.Q = labels.copy(), K.copy(), Q
        self.communities, self._cache = list(communities), dict(cache)

    def _escape_moves(self):
        for src in list(self.communities):
            split = self._cache.get((src, NEW))
            if split is not None and split.forward.size:
                yield (src, NEW), split
        for i, src in enumerate(self.communities):
            for dst in self.communities[i + 1:]:
                merge = _Shift(-np.inf, self.members(src), self.members(dst)[:0])
                yield (src, dst), merge

    def escape(self) -> bool:
        """Accept a losing split or merge if re-converging from it beats the current optimum.

        Splits are each community's best split into a new community; merges
        join two whole communities so that the next splits can re-cut them.
        The first such move that pays off is kept.
        """
        base = self.snapshot()
        callback, self.callback = self.callback, None
        improved = None
        try:
            for key, shift in list(self._escape_moves()):
                if not np.isfinite(shift.gain):
                    shift = _Shift(self._shift_gain(key, shift), shift.forward, shift.backward)
                self._apply(key, shift)
                self.converge()
                if self.Q > base[2] + self.tol:
                    improved = self.snapshot()
                    break
                self.restore(base)
        finally:
            self.callback = callback
        if improved is None:
            self.restore(base)
            return False
        self.restore(improved)
        if self.callback is not None:
            self.callback(self.labels.copy(), self.Q)
        return True

    def _shift_gain(self, key: tuple[int, int], shift: _Shift) -> float:
        """Exact gain of moving ``shift.forward`` from ``src`` to ``dst`` (one-way)."""
        src, dst = key
        move = shift.forward
        to_dst = 0.0 if dst == NEW else float(self.K[move, dst].sum())
        return to_dst - float(self.K[move, src].sum()) + float(self.S[np.ix_(move, move)].sum())

    def run(self, max_iter: Optional[int] = None, escape: bool = True) -> ComboResult:
        it = self.converge(max_iter)
        while escape and (max_iter is None or it < max_iter) and self.escape():
            it += 1 + self.converge(None if max_iter is None else max_iter - it)
        return ComboResult(Partition(self.labels), self.Q, it)


def combo_optimize(net: Layers, a: float = 1.0, seed: Optional[int] = 0, *, tol: float = 1e-9,
                   callback: Optional[MoveCallback] = None, max_iter: Optional[int] = None) -> ComboResult:
    """Maximize the layer-averaged loopless modularity at resolution ``a``.

    Returns the partition and its score.  Deterministic for a given
    ``(net, a, seed)``; ``callback(labels, Q)`` fires after every accepted
    move with the internally tracked score.
    """
    B = multilayer_matrix(as_layers(net), a)
    return ComboOptimizer(B, seed=seed, tol=tol, callback=callback).run(max_iter)


def best_of_restarts(net: Layers, a: float = 1.0, seed: Optional[int] = 0, restarts: int = 1,
                     **kwargs) -> ComboResult:
    """Best result over ``restarts`` independent runs seeded from ``seed``."""
    if restarts < 1:
        raise ValueError("restarts must be >= 1")
    B = multilayer_matrix(as_layers(net), a)
    seeds = np.random.SeedSequence(seed).generate_state(restarts) if restarts > 1 else [seed]
    best = None
    for s in seeds:
        res = ComboOptimizer(B, seed=int(s), **kwargs).run()
        if best is None or res.Q > best.Q + 1e-12:
            best = res
    return best
