from __future__ import annotations

import numpy as np

from ..netcore import NetworkError, Partition


def confusion_matrix(A: Partition, B: Partition) -> np.ndarray:
    if A.n != B.n:
        raise NetworkError(f"partitions cover different node sets ({A.n} vs {B.n} nodes)")
    N = np.zeros((A.community_count, B.community_count))
    np.add.at(N, (A.labels, B.labels), 1)
    return N


def nmi(A: Partition, B: Partition) -> float:
    """Normalized mutual information of two partitions of the same nodes.

    Uses the expanded-entropy form with ``0 log 0 = 0``.  Two single-community
    partitions are identical and score 1.
    """
    N = confusion_matrix(A, B)
    total = N.sum()
    if total == 0:
        raise NetworkError("partitions are empty")
    na = N.sum(axis=1)
    nb = N.sum(axis=0)
    nz = N > 0
    ratio = N[nz] * total / np.outer(na, nb)[nz]
    num = -2.0 * np.sum(N[nz] * np.log(ratio))
    den = np.sum(na * np.log(na / total)) + np.sum(nb * np.log(nb / total))
    if den == 0:
        return 1.0
    return float(min(1.0, max(0.0, num / den)))
