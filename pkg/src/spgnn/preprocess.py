"""Attack-surface extraction from the connectivity graph.

An edge survives filtering when at least one of two independent criteria
holds:

* source-vulnerable: the source asset carries a vulnerability that both
  changes scope and has base score >= 7.0 (the same vulnerability must
  satisfy both), so a foothold there can cross the connection; or
* critical-destination: the destination is a critical asset, so the
  connection is a candidate last hop of an attack path.

Nodes with no retained incident edge are dropped. Self-loop removal is a
separate step so its effect on model accuracy can be measured.
"""

from __future__ import annotations

from dataclasses import dataclass, field

from .netgraph import Asset, ConnectivityGraph, Edge, EdgeKey

# Minimum CVSS v3 base score for a vulnerability to qualify an edge source.
QUALIFYING_MIN_SCORE = 7.0

REASON_SOURCE_VULNERABLE = "source-vulnerable"
REASON_CRITICAL_DESTINATION = "critical-destination"


def has_qualifying_vuln(asset: Asset) -> bool:
    return any(
        v.scope_changed and v.base_score >= QUALIFYING_MIN_SCORE
        for v in asset.vulnerabilities
    )


def max_qualifying_score(asset: Asset) -> float:
    """Highest qualifying vulnerability score on the asset, 0.0 if none."""
    scores = [
        v.base_score
        for v in asset.vulnerabilities
        if v.scope_changed and v.base_score >= QUALIFYING_MIN_SCORE
    ]
    return max(scores) if scores else 0.0


@dataclass
class AttackSurfaceGraph:
    nodes: set[str]
    edges: list[Edge]
    provenance: dict[EdgeKey, str] = field(default_factory=dict)

    def out_adjacency(self) -> dict[str, list[Edge]]:
        adj: dict[str, list[Edge]] = {node: [] for node in self.nodes}
        for edge in self.edges:
            adj[edge.src].append(edge)
        return adj

    def has_self_loops(self) -> bool:
        return any(e.src == e.dst for e in self.edges)


def filter_edges(graph: ConnectivityGraph, critical: set[str]) -> AttackSurfaceGraph:
    """Keep edges meeting either retention criterion; drop isolated nodes.

    Self-loops that meet a criterion are retained here; use
    remove_self_loops for the reduced surface.
    """
    edges: list[Edge] = []
    provenance: dict[EdgeKey, str] = {}
    for edge in graph.edges:
        if has_qualifying_vuln(graph.assets[edge.src]):
            reason = REASON_SOURCE_VULNERABLE
        elif edge.dst in critical:
            reason = REASON_CRITICAL_DESTINATION
        else:
            continue
        edges.append(edge)
        provenance[edge.key] = reason
    nodes = {e.src for e in edges} | {e.dst for e in edges}
    return AttackSurfaceGraph(nodes=nodes, edges=edges, provenance=provenance)


def remove_self_loops(surface: AttackSurfaceGraph) -> AttackSurfaceGraph:
    """Drop src == dst edges; nodes left isolated are dropped with them."""
    edges = [e for e in surface.edges if e.src != e.dst]
    nodes = {e.src for e in edges} | {e.dst for e in edges}
    provenance = {e.key: surface.provenance[e.key] for e in edges}
    return AttackSurfaceGraph(nodes=nodes, edges=edges, provenance=provenance)
