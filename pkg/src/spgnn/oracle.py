"""Exact shortest-path labels and attack-path ground truth.

Labels follow the training convention: the label of a node is the hop count
of the shortest directed path to the nearest reachable target, and 0 doubles
as both "is a target" and "reaches no target". The unambiguous distance
table (math.inf for unreachable) is kept alongside for evaluation code that
must tell the two apart.
"""

from __future__ import annotations

import math
from collections import deque
from dataclasses import dataclass

from .netgraph import Asset, EdgeKey, CRITICALITY_MAX
from .preprocess import AttackSurfaceGraph


@dataclass
class LabelTable:
    distances: dict[str, float]  # math.inf when no target is reachable

    def label(self, node: str) -> int:
        d = self.distances[node]
        return 0 if math.isinf(d) else int(d)

    def labels(self) -> dict[str, int]:
        return {node: self.label(node) for node in self.distances}

    def unreachable(self) -> set[str]:
        return {n for n, d in self.distances.items() if math.isinf(d)}


@dataclass
class TriageParams:
    """Criteria an attack path must meet to count as critical."""

    max_start_criticality: int = 4
    path_length_limit: int = 5  # maximum number of edges
    target_criticality: int = CRITICALITY_MAX
    target_app: str = "mission-critical"


def _hop_distances(
    surface: AttackSurfaceGraph, sources: set[str], reverse: bool
) -> dict[str, float]:
    """Multi-source BFS hop distances over the surface graph.

    reverse=False measures distance from the source set to each node;
    reverse=True measures distance from each node to the source set.
    """
    adj: dict[str, list[str]] = {node: [] for node in surface.nodes}
    for edge in surface.edges:
        if reverse:
            adj[edge.dst].append(edge.src)
        else:
            adj[edge.src].append(edge.dst)
    dist = {node: math.inf for node in surface.nodes}
    queue: deque[str] = deque()
    for node in sorted(sources & surface.nodes):
        dist[node] = 0.0
        queue.append(node)
    while queue:
        node = queue.popleft()
        step = dist[node] + 1.0
        for neighbor in adj[node]:
            if step < dist[neighbor]:
                dist[neighbor] = step
                queue.append(neighbor)
    return dist


def shortest_paths(surface: AttackSurfaceGraph, targets: set[str]) -> LabelTable:
    """Distance from every surface node to its nearest target."""
    return LabelTable(distances=_hop_distances(surface, targets, reverse=True))


def path_start_nodes(
    surface: AttackSurfaceGraph, assets: dict[str, Asset], params: TriageParams
) -> set[str]:
    return {
        n
        for n in surface.nodes
        if assets[n].criticality <= params.max_start_criticality
    }


def path_target_nodes(
    surface: AttackSurfaceGraph, assets: dict[str, Asset], params: TriageParams
) -> set[str]:
    return {
        n
        for n in surface.nodes
        if assets[n].criticality == params.target_criticality
        and assets[n].app_criticality == params.target_app
    }


@dataclass
class ReachTables:
    """Distance tables that decide attack-path membership for every edge."""

    from_start: dict[str, float]  # hops from the nearest qualifying start
    to_target: dict[str, float]  # hops to the nearest qualifying target


def reach_tables(
    surface: AttackSurfaceGraph, assets: dict[str, Asset], params: TriageParams
) -> ReachTables:
    starts = path_start_nodes(surface, assets, params)
    targets = path_target_nodes(surface, assets, params)
    return ReachTables(
        from_start=_hop_distances(surface, starts, reverse=False),
        to_target=_hop_distances(surface, targets, reverse=True),
    )


def true_critical_edges(
    surface: AttackSurfaceGraph,
    assets: dict[str, Asset],
    params: TriageParams,
    labels: LabelTable | None = None,
) -> set[EdgeKey]:
    """Edges lying on some qualifying attack path, by exact search.

    An edge (u, v) is on a qualifying path exactly when the shortest way
    from a qualifying start to u, plus this edge, plus the shortest way
    from v to a qualifying target fits in the length limit. `labels` is
    accepted for interface symmetry; the start/target tables are computed
    here because the label table measures distance to all critical assets,
    not the mission-critical targets.
    """
    del labels
    tables = reach_tables(surface, assets, params)
    critical: set[EdgeKey] = set()
    for edge in surface.edges:
        total = tables.from_start[edge.src] + 1.0 + tables.to_target[edge.dst]
        if total <= params.path_length_limit:
            critical.add(edge.key)
    return critical
