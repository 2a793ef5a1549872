"""Backbone extraction: disparity filter plus maximum-spanning-tree overlay.

The disparity filter keeps edges whose weight is improbably large under a
uniform null at either endpoint: for a node of degree k and strength s, edge
weight w gets node-local p-value (1 - w/s)^(k-1). The MST (one per connected
component) is always overlaid so the backbone keeps the input connectivity
regardless of alpha.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass
from typing import Iterable

from .corpus import ConfigError
from .proximity import ProximityNetwork


@dataclass(frozen=True)
class BackboneEdge:
    i: str
    j: str
    weight: float
    significance: float      # disparity p-value, 1.0 for MST-only edges at degree-1 nodes
    origin: str              # "filter", "mst", or "both"


def _edge_key(i: str, j: str) -> tuple[str, str]:
    return (i, j) if i <= j else (j, i)


def edge_significances(net: ProximityNetwork) -> dict[tuple[str, str], float]:
    """Min over the two endpoints of the node-local disparity p-value.

    Degree-1 endpoints contribute p = 1 (the (1-w/s)^0 form is degenerate),
    so their edges can only be retained via the other endpoint or the MST.
    """
    incident: dict[str, list[tuple[str, float]]] = {n: [] for n in net.nodes}
    for i, j, w in net.edges:
        incident[i].append((j, w))
        incident[j].append((i, w))
    sig: dict[tuple[str, str], float] = {_edge_key(i, j): 1.0 for i, j, _ in net.edges}
    for node, nbrs in incident.items():
        k = len(nbrs)
        if k < 2:
            continue
        s = sum(w for _, w in nbrs)
        for other, w in nbrs:
            p = (1.0 - w / s) ** (k - 1)
            key = _edge_key(node, other)
            if p < sig[key]:
                sig[key] = p
    return sig


def disparity_filter(net: ProximityNetwork, alpha: float) -> set[BackboneEdge]:
    """Edges significant at level alpha at either endpoint."""
    if not (0.0 < alpha < 1.0):
        raise ConfigError(f"alpha must be in (0,1), got {alpha}")
    sig = edge_significances(net)
    out = set()
    for i, j, w in net.edges:
        key = _edge_key(i, j)
        if sig[key] < alpha:
            out.add(BackboneEdge(key[0], key[1], w, sig[key], "filter"))
    return out


class _UnionFind:
    def __init__(self, items: Iterable[str]):
        self.parent = {x: x for x in items}

    def find(self, x: str) -> str:
        root = x
        while self.parent[root] != root:
            root = self.parent[root]
        while self.parent[x] != root:
            self.parent[x], x = root, self.parent[x]
        return root

    def union(self, a: str, b: str) -> bool:
        ra, rb = self.find(a), self.find(b)
        if ra == rb:
            return False
        self.parent[rb] = ra
        return True


def max_spanning_tree(net: ProximityNetwork) -> set[BackboneEdge]:
    """Kruskal on descending weight; ties broken by lexicographic (i, j).

    Returns one spanning tree per connected component; isolated nodes
    contribute no edges.
    """
    sig = edge_significances(net)
    ordered = sorted(
        (_edge_key(i, j) + (w,) for i, j, w in net.edges),
        key=lambda e: (-e[2], e[0], e[1]),
    )
    uf = _UnionFind(net.nodes)
    out = set()
    for i, j, w in ordered:
        if uf.union(i, j):
            out.add(BackboneEdge(i, j, w, sig[(i, j)], "mst"))
    return out


def backbone(net: ProximityNetwork, alpha: float = 0.05, with_mst: bool = True) -> set[BackboneEdge]:
    """Union of disparity-significant edges and the MST, with origin tags."""
    filt = disparity_filter(net, alpha)
    if not with_mst:
        return filt
    mst = max_spanning_tree(net)
    filt_keys = {(e.i, e.j) for e in filt}
    mst_keys = {(e.i, e.j) for e in mst}
    out = set()
    for e in filt:
        origin = "both" if (e.i, e.j) in mst_keys else "filter"
        out.add(BackboneEdge(e.i, e.j, e.weight, e.significance, origin))
    for e in mst:
        if (e.i, e.j) not in filt_keys:
            out.add(e)
    return out


def write_backbone(edges: set[BackboneEdge], fh, delimiter: str = ",") -> None:
    w = csv.writer(fh, delimiter=delimiter, lineterminator="\n")
    w.writerow(["tool_i", "tool_j", "phi", "significance", "origin"])
    for e in sorted(edges, key=lambda e: (e.i, e.j)):
        w.writerow([e.i, e.j, f"{e.weight:.12g}", f"{e.significance:.12g}", e.origin])


def backbone_graphml(net: ProximityNetwork, edges: set[BackboneEdge], path: str) -> None:
    import networkx as nx

    g = nx.Graph()
    for n in net.nodes:
        g.add_node(n, **net.node_attrs.get(n, {}))
    for e in sorted(edges, key=lambda e: (e.i, e.j)):
        g.add_edge(e.i, e.j, phi=e.weight, significance=e.significance, origin=e.origin)
    nx.write_graphml(g, path)
