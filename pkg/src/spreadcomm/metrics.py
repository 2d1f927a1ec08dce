"""Partition agreement: Rand index and the chance-corrected (adjusted) index."""

from __future__ import annotations

import warnings

import numpy as np

from .community import Partition


class MetricError(ValueError):
    pass


def _coerce(p) -> Partition:
    return p if isinstance(p, Partition) else Partition.from_labels(list(p))


def _pair_counts(p1, p2):
    p1, p2 = _coerce(p1), _coerce(p2)
    if p1.n != p2.n:
        raise MetricError("partitions cover different vertex sets")
    if p1.n < 2:
        raise MetricError("need at least 2 vertices")
    contingency = np.zeros((p1.k, p2.k), dtype=np.int64)
    np.add.at(contingency, (p1.assignment, p2.assignment), 1)

    def comb2(x):
        return x * (x - 1) // 2

    sum_cells = int(comb2(contingency).sum())
    sum_rows = int(comb2(contingency.sum(axis=1)).sum())
    sum_cols = int(comb2(contingency.sum(axis=0)).sum())
    total = int(comb2(np.int64(p1.n)))
    return sum_cells, sum_rows, sum_cols, total


def rand_index(p1, p2) -> float:
    """Fraction of vertex pairs on which the two partitions agree.

    Accepts Partition objects or plain label sequences.
    """
    sum_cells, sum_rows, sum_cols, total = _pair_counts(p1, p2)
    agreements = total + 2 * sum_cells - sum_rows - sum_cols
    return agreements / total


def adjusted_rand_index(p1, p2) -> float:
    """Hubert-Arabie chance-corrected Rand index.

    Accepts Partition objects or plain label sequences.

    Returns 0 by convention (with a warning) when the correction denominator
    vanishes, i.e. when both partitions are trivial.
    """
    sum_cells, sum_rows, sum_cols, total = _pair_counts(p1, p2)
    # integer numerator and denominator keep simple cases exact
    num = 2 * (total * sum_cells - sum_rows * sum_cols)
    denom = total * (sum_rows + sum_cols) - 2 * sum_rows * sum_cols
    if denom == 0:
        warnings.warn("adjusted Rand index undefined for trivial partitions; returning 0")
        return 0.0
    return num / denom
