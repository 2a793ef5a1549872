"""Synthetic corpora, planted-structure graphs, and brute-force oracles.

The oracles deliberately re-implement the pipeline's formulas with naive
loops and set arithmetic; they share no code with the main path and are
size-capped, since their only job is to check the fast implementations on
small instances.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from itertools import combinations
from typing import Iterator, Optional

import numpy as np
from scipy.special import zeta

from .corpus import MentionRecord

ORACLE_MATRIX_LIMIT = 8
ORACLE_GRAPH_LIMIT = 8


@dataclass
class SynthConfig:
    n_disciplines: int = 6
    n_tools: int = 40
    n_papers: int = 200
    n_blocks: int = 2            # planted tool communities; 0 disables
    block_affinity: float = 6.0  # sampling boost for a discipline's own block
    tail_exponent: Optional[float] = None
    label_noise: float = 0.0     # fraction of records given non-software labels
    year_range: tuple[int, int] = (2004, 2021)
    mentions_per_paper: int = 3
    seed: int = 0

    def __post_init__(self) -> None:
        if min(self.n_disciplines, self.n_tools) < 1 or self.n_papers < 0:
            raise ValueError("counts must be >= 1 (papers >= 0)")


def generate_corpus(c: SynthConfig) -> Iterator[MentionRecord]:
    """Emit synthetic mention records in the corpus input format.

    Tools are split evenly over planted blocks, each discipline is affiliated
    with one block (round-robin), and papers sample tools with a popularity
    distribution boosted toward the affiliated block, which induces
    co-specialization downstream.
    """
    rng = np.random.default_rng(c.seed)
    tools = [f"Tool{t:04d}" for t in range(c.n_tools)]
    divisions = [f"{30 + d:02d}" for d in range(c.n_disciplines)]
    if c.n_blocks > 0:
        tool_block = np.arange(c.n_tools) % c.n_blocks
        disc_block = np.arange(c.n_disciplines) % c.n_blocks
    else:
        tool_block = np.zeros(c.n_tools, dtype=int)
        disc_block = np.zeros(c.n_disciplines, dtype=int)
    if c.tail_exponent is not None:
        pop = sample_discrete_power_law(c.tail_exponent, 1, c.n_tools,
                                        rng=rng).astype(np.float64)
    else:
        pop = np.ones(c.n_tools)
    lo, hi = c.year_range
    for p in range(c.n_papers):
        d = int(rng.integers(c.n_disciplines))
        weights = pop * np.where(tool_block == disc_block[d], c.block_affinity, 1.0)
        weights = weights / weights.sum()
        k = 1 + int(rng.integers(c.mentions_per_paper))
        chosen = rng.choice(c.n_tools, size=min(k, c.n_tools), replace=False, p=weights)
        year = int(rng.integers(lo, hi + 1))
        codes = [divisions[d]]
        if rng.random() < 0.2 and c.n_disciplines > 1:
            extra = int(rng.integers(c.n_disciplines))
            if divisions[extra] not in codes:
                codes.append(divisions[extra])
        for t in chosen:
            label = "software"
            if c.label_noise > 0 and rng.random() < c.label_noise:
                label = str(rng.choice(["not_software", "unclear", "not_curated"]))
            yield MentionRecord(
                paper_id=f"P{p:07d}",
                raw_name=tools[int(t)],
                curation_label=label,
                doi=f"10.5555/synth.{p:07d}",
                year=year,
                discipline_codes=codes,
            )


def sample_discrete_power_law(alpha: float, x_min: int, n: int,
                              seed: Optional[int] = None,
                              rng: Optional[np.random.Generator] = None) -> np.ndarray:
    """Inverse-CDF sampling from the zeta distribution on {x_min, x_min+1, ...}."""
    if rng is None:
        rng = np.random.default_rng(seed)
    z0 = zeta(alpha, x_min)
    u = rng.random(n)
    # ccdf(x) = zeta(alpha, x) / z0; find smallest x with ccdf(x+1) < 1-u+ccdf... via
    # doubling + bisection on the ccdf
    out = np.empty(n, dtype=np.int64)
    for i, ui in enumerate(u):
        target = (1.0 - ui) * z0          # want largest x with zeta(alpha, x) >= target
        hi = x_min
        while zeta(alpha, hi + 1) >= target:
            hi = 2 * hi + 1
        lo = x_min
        while lo < hi:
            mid = (lo + hi + 1) // 2
            if zeta(alpha, mid) >= target:
                lo = mid
            else:
                hi = mid - 1
        out[i] = lo
    return out


def planted_partition_graph(n_blocks: int, block_size: int, p_in: float,
                            p_out: float, seed: int):
    """Bernoulli planted-partition graph; returns (edges, labels) over string ids."""
    rng = np.random.default_rng(seed)
    n = n_blocks * block_size
    labels = {f"n{i:03d}": i // block_size for i in range(n)}
    names = sorted(labels)
    edges = []
    for a, b in combinations(range(n), 2):
        p = p_in if labels[names[a]] == labels[names[b]] else p_out
        if rng.random() < p:
            edges.append((names[a], names[b], 1.0))
    return edges, labels


# ---------------------------------------------------------------------------
# oracles


def _check_matrix(counts) -> np.ndarray:
    m = np.asarray(counts, dtype=np.float64)
    if m.ndim != 2 or max(m.shape) > ORACLE_MATRIX_LIMIT:
        raise ValueError(f"oracle limited to {ORACLE_MATRIX_LIMIT}x{ORACLE_MATRIX_LIMIT} matrices")
    return m


def oracle_rca(counts) -> np.ndarray:
    """Scalar per-cell evaluation of the specialization ratio; NaN where undefined."""
    m = _check_matrix(counts)
    total = m.sum()
    out = np.full(m.shape, np.nan)
    for i in range(m.shape[0]):
        for j in range(m.shape[1]):
            row = sum(m[i, jj] for jj in range(m.shape[1]))
            col = sum(m[ii, j] for ii in range(m.shape[0]))
            if row > 0 and col > 0:
                out[i, j] = (m[i, j] / row) / (col / total)
    return out


def oracle_proximity(basis_sets: dict[str, set]) -> dict[tuple[str, str], float]:
    """Min of the two conditional co-specialization probabilities, by sets."""
    out = {}
    for i, j in combinations(sorted(basis_sets), 2):
        di, dj = basis_sets[i], basis_sets[j]
        if not di or not dj:
            out[(i, j)] = 0.0
            continue
        inter = len(di & dj)
        out[(i, j)] = min(inter / len(di), inter / len(dj))
    return out


def oracle_disparity_pvalues(edges: list[tuple[str, str, float]]) -> dict[tuple[str, str], float]:
    """Direct evaluation of (1 - w/s)^(k-1), min over the two endpoints."""
    incident: dict[str, list[tuple[str, float]]] = {}
    for i, j, w in edges:
        incident.setdefault(i, []).append((j, w))
        incident.setdefault(j, []).append((i, w))
    out = {}
    for i, j, w in edges:
        key = (i, j) if i <= j else (j, i)
        ps = []
        for node in (i, j):
            nbrs = incident[node]
            k = len(nbrs)
            if k < 2:
                ps.append(1.0)
            else:
                s = sum(wt for _, wt in nbrs)
                ps.append((1.0 - w / s) ** (k - 1))
        out[key] = min(ps)
    return out


def oracle_mst(edges: list[tuple[str, str, float]]) -> float:
    """Maximum total spanning-forest weight by exhaustive enumeration."""
    nodes = sorted({n for e in edges for n in e[:2]})
    if len(nodes) > ORACLE_GRAPH_LIMIT:
        raise ValueError(f"oracle limited to {ORACLE_GRAPH_LIMIT} nodes")

    def components(chosen: list[tuple[str, str, float]]) -> int:
        parent = {n: n for n in nodes}

        def find(x):
            while parent[x] != x:
                x = parent[x]
            return x

        for a, b, _ in chosen:
            ra, rb = find(a), find(b)
            if ra != rb:
                parent[rb] = ra
        return len({find(n) for n in nodes})

    target = components(list(edges))
    need = len(nodes) - target
    best = -math.inf
    for subset in combinations(edges, need) if need <= len(edges) else []:
        if components(list(subset)) == target:
            best = max(best, sum(w for _, _, w in subset))
    return best if best > -math.inf else 0.0


def oracle_hhi(community_counts: dict[int, int]) -> Optional[float]:
    """Naive sum of squared shares."""
    total = sum(community_counts.values())
    if total == 0:
        return None
    return sum((n / total) ** 2 for n in community_counts.values())
