"""
Clustering quality measures against ground-truth place categories.

Accuracy gives every cluster its majority category, so it grows with cluster
purity whatever the number of clusters. Clustering Error only credits a
one-to-one matching between clusters and categories, so surplus clusters are
penalized.
"""

from dataclasses import dataclass
from typing import Hashable, List, Sequence

import numpy as np
from scipy.optimize import linear_sum_assignment

from Errors import InputValidationError


@dataclass
class ContingencyTable:
    """counts[i, j]: samples put in clusters[i] whose truth is categories[j]."""

    clusters: List[Hashable]
    categories: List[Hashable]
    counts: np.ndarray

    @classmethod
    def from_labels(cls, assignments: Sequence[Hashable], truths: Sequence[Hashable]) -> "ContingencyTable":
        if len(assignments) != len(truths):
            raise InputValidationError(f"{len(assignments)} assignments but {len(truths)} truth labels")
        clusters = sorted(set(assignments), key=str)
        categories = sorted(set(truths), key=str)
        row = {c: i for i, c in enumerate(clusters)}
        col = {c: j for j, c in enumerate(categories)}
        counts = np.zeros((len(clusters), len(categories)), dtype=np.int64)
        for a, t in zip(assignments, truths):
            counts[row[a], col[t]] += 1
        return cls(clusters, categories, counts)

    @property
    def total(self) -> int:
        return int(self.counts.sum())

    @property
    def row_totals(self) -> np.ndarray:
        return self.counts.sum(axis=1)

    @property
    def column_totals(self) -> np.ndarray:
        return self.counts.sum(axis=0)


def _require_samples(table: ContingencyTable) -> None:
    if table.total <= 0:
        raise InputValidationError("cannot evaluate an empty contingency table")


def accuracy(table: ContingencyTable) -> float:
    """Sum over clusters of the majority category count, over N."""
    _require_samples(table)
    return float(table.counts.max(axis=1).sum()) / table.total


def matching_weight(table: ContingencyTable) -> int:
    """Weight of the maximum one-to-one cluster/category matching."""
    if table.counts.size == 0:
        return 0
    rows, cols = linear_sum_assignment(table.counts, maximize=True)
    return int(table.counts[rows, cols].sum())


def clustering_error(table: ContingencyTable) -> float:
    """1 - (maximum matching weight) / N."""
    _require_samples(table)
    return 1.0 - matching_weight(table) / table.total


@dataclass
class EvalReport:
    accuracy: float
    clustering_error: float
    n_clusters: int
    n_categories: int
    n_samples: int

    @property
    def matched_accuracy(self) -> float:
        """Accuracy under the one-to-one matching, i.e. 1 - CE."""
        return 1.0 - self.clustering_error


def evaluate(assignments: Sequence[Hashable], truths: Sequence[Hashable]) -> EvalReport:
    """Build the table for predicted cluster ids against truth categories and measure it."""
    if len(assignments) != len(truths):
        raise InputValidationError(f"{len(assignments)} assignments but {len(truths)} truth labels")
    if len(assignments) == 0:
        raise InputValidationError("nothing to evaluate")
    table = ContingencyTable.from_labels(assignments, truths)
    return EvalReport(
        accuracy=accuracy(table),
        clustering_error=clustering_error(table),
        n_clusters=len(table.clusters),
        n_categories=len(table.categories),
        n_samples=table.total,
    )
