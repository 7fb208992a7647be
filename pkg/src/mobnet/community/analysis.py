"""Resolution sweeps and partition-similarity tables."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Mapping, Optional

import numpy as np

from ..netcore import NetworkError, Partition
from .combo import ComboResult, best_of_restarts
from .modularity import Layers
from .nmi import nmi


@dataclass(frozen=True)
class SweepPoint:
    a: float
    community_count: int
    Q: float
    partition: Partition


def resolution_sweep(net: Layers, a_values: Iterable[float], seed: Optional[int] = 0,
                     restarts: int = 1) -> list[SweepPoint]:
    """Optimize at each resolution with the same seed."""
    out = []
    for a in a_values:
        if not a > 0:
            raise NetworkError(f"resolution values must be positive, got {a}")
        res: ComboResult = best_of_restarts(net, a, seed, restarts)
        out.append(SweepPoint(float(a), res.partition.community_count, res.Q, res.partition))
    return out


@dataclass(frozen=True)
class SimilarityRow:
    name: str
    scores: dict[str, float]

    @property
    def average(self) -> float:
        return float(np.mean(list(self.scores.values())))


def similarity_report(partitions: Mapping[str, Partition],
                      references: Mapping[str, Partition]) -> list[SimilarityRow]:
    """NMI of every mobility partition against every reference, plus the average."""
    if not references:
        raise NetworkError("need at least one reference partition")
    return [
        SimilarityRow(name, {ref: nmi(part, rp) for ref, rp in references.items()})
        for name, part in partitions.items()
    ]
