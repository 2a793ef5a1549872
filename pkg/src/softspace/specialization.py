"""Revealed comparative advantage (RCA) matrices and specialization sets.

RCA of discipline d in software s is the discipline's within-portfolio share
of s divided by the corpus-wide share of s:

    rca[d,s] = (M[d,s] / sum_s M[d,s]) / (sum_d M[d,s] / sum_{d,s} M[d,s])

Cells whose row or column marginal is zero are masked (undefined), not zero.
"""

from __future__ import annotations

import csv
import json
import logging
from dataclasses import dataclass, field
from typing import TYPE_CHECKING

import numpy as np

from .corpus import ConfigError, CountMatrix, DataError

if TYPE_CHECKING:
    from .community import CommunityAssignment

logger = logging.getLogger(__name__)


@dataclass
class RcaMatrix:
    rows: list[str]
    cols: list[str]
    values: np.ndarray            # float64, 0 where masked
    undefined_mask: np.ndarray    # bool, True where RCA is undefined

    def defined(self) -> np.ndarray:
        return ~self.undefined_mask


@dataclass
class SpecializationSet:
    threshold: float
    comparison: str                       # "strict" or "inclusive"
    members: dict[str, set[str]]          # discipline -> set of entity names

    def basis_sets(self, entities: list[str]) -> dict[str, set[str]]:
        """Invert membership: entity -> set of disciplines specialized in it."""
        out: dict[str, set[str]] = {e: set() for e in entities}
        for disc, names in self.members.items():
            for n in names:
                if n in out:
                    out[n].add(disc)
        return out


def rca(m: CountMatrix) -> RcaMatrix:
    """Compute the RCA matrix from deduplicated counts."""
    counts = m.counts.astype(np.float64)
    total = counts.sum()
    if total <= 0:
        raise DataError("RCA undefined for an all-zero count matrix")
    row_sums = counts.sum(axis=1, keepdims=True)
    col_sums = counts.sum(axis=0, keepdims=True)
    mask = (row_sums == 0) | (col_sums == 0)
    with np.errstate(divide="ignore", invalid="ignore"):
        values = (counts / row_sums) / (col_sums / total)
    values = np.where(mask, 0.0, values)
    return RcaMatrix(rows=list(m.rows), cols=list(m.cols),
                     values=values, undefined_mask=np.broadcast_to(mask, counts.shape).copy())


def specialize(r: RcaMatrix, threshold: float = 1.0, comparison: str = "strict") -> SpecializationSet:
    """Threshold an RCA matrix into per-discipline specialization sets.

    Masked cells are never members regardless of the comparison mode.
    """
    if threshold <= 0:
        raise ConfigError(f"threshold must be > 0, got {threshold}")
    if comparison not in ("strict", "inclusive"):
        raise ConfigError(f"comparison must be strict|inclusive, got {comparison!r}")
    if comparison == "strict":
        hits = r.values > threshold
    else:
        hits = r.values >= threshold
    hits &= r.defined()
    members = {
        disc: {r.cols[j] for j in np.flatnonzero(hits[i])}
        for i, disc in enumerate(r.rows)
    }
    return SpecializationSet(threshold=threshold, comparison=comparison, members=members)


def community_count_matrix(m: CountMatrix, assignment: "CommunityAssignment") -> CountMatrix:
    """Collapse software columns into community columns by summation."""
    assigned = [j for j, name in enumerate(m.cols) if name in assignment.labels]
    if not assigned:
        raise DataError("community assignment covers no column of the count matrix")
    n_dropped = len(m.cols) - len(assigned)
    if n_dropped:
        logger.info("community_rca: %d unassigned tools dropped", n_dropped)
    comm_ids = sorted({assignment.labels[m.cols[j]] for j in assigned})
    col_of = {c: k for k, c in enumerate(comm_ids)}
    counts = np.zeros((len(m.rows), len(comm_ids)), dtype=np.int64)
    for j in assigned:
        counts[:, col_of[assignment.labels[m.cols[j]]]] += m.counts[:, j]
    return CountMatrix(rows=list(m.rows), cols=[f"C{c}" for c in comm_ids],
                       counts=counts, year_range=m.year_range)


def community_rca(m: CountMatrix, assignment: "CommunityAssignment") -> RcaMatrix:
    """RCA of each discipline against each tool community (column rollup)."""
    return rca(community_count_matrix(m, assignment))


# ---------------------------------------------------------------------------
# IO


def write_rca(r: RcaMatrix, fh, delimiter: str = ",") -> None:
    w = csv.writer(fh, delimiter=delimiter, lineterminator="\n")
    w.writerow(["discipline", "entity", "rca", "masked"])
    for i, disc in enumerate(r.rows):
        for j, name in enumerate(r.cols):
            masked = bool(r.undefined_mask[i, j])
            w.writerow([disc, name, "" if masked else f"{r.values[i, j]:.12g}",
                        int(masked)])


def heatmap_bundle(r: RcaMatrix) -> dict:
    """Plot-ready JSON bundle: row/column order plus the value grid."""
    return {
        "rows": r.rows,
        "cols": r.cols,
        "values": [[None if r.undefined_mask[i, j] else round(float(r.values[i, j]), 12)
                    for j in range(len(r.cols))] for i in range(len(r.rows))],
    }


def write_heatmap(r: RcaMatrix, fh) -> None:
    json.dump(heatmap_bundle(r), fh, indent=2, sort_keys=True)
    fh.write("\n")
