"""Tool-tool proximity from co-specialization patterns.

Proximity between tools i and j is the minimum of the two conditional
probabilities of co-specialization, which for specialization sets reduces to

    phi[i,j] = |D_i & D_j| / max(|D_i|, |D_j|)

where D_i is the set of disciplines specialized in tool i.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .specialization import SpecializationSet


@dataclass
class ProximityMatrix:
    entities: list[str]
    values: np.ndarray          # symmetric float64 in [0,1]
    basis_count: np.ndarray     # per-entity number of specializing disciplines

    def isolated(self) -> list[str]:
        """Entities specialized in zero disciplines (kept as isolated nodes)."""
        return [e for e, c in zip(self.entities, self.basis_count) if c == 0]


@dataclass
class ProximityNetwork:
    nodes: list[str]
    node_attrs: dict[str, dict]
    edges: list[tuple[str, str, float]]   # i < j, weight in (0,1]

    def n_edges(self) -> int:
        return len(self.edges)


def proximity(spec: SpecializationSet, entities: list[str]) -> ProximityMatrix:
    """Build the symmetric proximity matrix over the given entity order."""
    disciplines = sorted(spec.members)
    di = {d: i for i, d in enumerate(disciplines)}
    n = len(entities)
    z = np.zeros((len(disciplines), n), dtype=np.float64)
    col = {e: j for j, e in enumerate(entities)}
    for d, names in spec.members.items():
        for name in names:
            j = col.get(name)
            if j is not None:
                z[di[d], j] = 1.0
    basis = z.sum(axis=0)
    inter = z.T @ z
    denom = np.maximum.outer(basis, basis)
    with np.errstate(divide="ignore", invalid="ignore"):
        values = np.where(denom > 0, inter / np.where(denom > 0, denom, 1.0), 0.0)
    np.fill_diagonal(values, np.where(basis > 0, 1.0, 0.0))
    return ProximityMatrix(entities=list(entities), values=values,
                           basis_count=basis.astype(np.int64))


def to_network(p: ProximityMatrix, node_attrs: Optional[dict[str, dict]] = None) -> ProximityNetwork:
    """Emit all undirected positive-weight edges; isolated entities stay as nodes."""
    attrs = node_attrs or {}
    edges = []
    n = len(p.entities)
    for i in range(n):
        for j in range(i + 1, n):
            w = float(p.values[i, j])
            if w > 0.0:
                edges.append((p.entities[i], p.entities[j], w))
    return ProximityNetwork(nodes=list(p.entities),
                            node_attrs={e: dict(attrs.get(e, {})) for e in p.entities},
                            edges=edges)


def write_edge_list(net: ProximityNetwork, fh, delimiter: str = ",") -> None:
    w = csv.writer(fh, delimiter=delimiter, lineterminator="\n")
    w.writerow(["tool_i", "tool_j", "phi"])
    for i, j, phi in net.edges:
        w.writerow([i, j, f"{phi:.12g}"])


def read_edge_list(stream, delimiter: str = ",") -> ProximityNetwork:
    rows = list(csv.reader(stream, delimiter=delimiter))
    if not rows or rows[0] != ["tool_i", "tool_j", "phi"]:
        raise ValueError("bad edge list header")
    edges = [(r[0], r[1], float(r[2])) for r in rows[1:] if r]
    nodes = sorted({n for e in edges for n in e[:2]})
    return ProximityNetwork(nodes=nodes, node_attrs={n: {} for n in nodes}, edges=edges)


def to_graphml(net: ProximityNetwork, path: str) -> None:
    """Export via networkx, carrying node attributes and phi edge weights."""
    import networkx as nx

    g = nx.Graph()
    for n in net.nodes:
        g.add_node(n, **net.node_attrs.get(n, {}))
    for i, j, phi in net.edges:
        g.add_edge(i, j, phi=phi)
    nx.write_graphml(g, path)
