"""Mitigation planning: deny overrides and advisories from edge verdicts.

Non-compliant-critical edges are blocked with a deny override scoped to the
exact source address, destination address, protocol, and port, overriding
the edge's enabling policy. Compliant-critical edges only raise an advisory
naming the policy to review. Applying a plan produces a new connectivity
graph; it never removes a compliant edge and applying the same plan twice
changes nothing further.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field

from .errors import PolicyResolutionError
from .netgraph import ConnectivityGraph, Edge, EdgeKey, edge_key_str, parse_edge_key
from .triage import (
    CLASS_COMPLIANT_CRITICAL,
    CLASS_NONCOMPLIANT_CRITICAL,
    EdgeVerdict,
)

log = logging.getLogger(__name__)

ACTION_DENY = "deny"
ACTION_WARN = "warn"


@dataclass(frozen=True)
class DenyOverride:
    edge: EdgeKey
    src_addr: str
    dst_addr: str
    protocol: str
    port: int
    policy_id: str  # the enabling policy this override supersedes
    reason: str


@dataclass(frozen=True)
class PolicyAdvisory:
    edge: EdgeKey
    policy_id: str
    reason: str


@dataclass
class MitigationPlan:
    blocks: list[DenyOverride] = field(default_factory=list)
    advisories: list[PolicyAdvisory] = field(default_factory=list)

    def blocked_keys(self) -> set[EdgeKey]:
        return {b.edge for b in self.blocks}


def plan(verdicts: list[EdgeVerdict], graph: ConnectivityGraph) -> MitigationPlan:
    """Turn verdicts into deny overrides and advisories.

    Raises PolicyResolutionError if a to-be-blocked edge references a
    policy absent from the graph: an override must name the policy it
    supersedes.
    """
    edge_by_key = {e.key: e for e in graph.edges}
    result = MitigationPlan()
    for verdict in verdicts:
        if verdict.verdict == CLASS_NONCOMPLIANT_CRITICAL:
            edge = edge_by_key.get(verdict.edge)
            if edge is None:
                raise PolicyResolutionError(
                    f"verdict names edge {edge_key_str(verdict.edge)} "
                    "which is not in the graph"
                )
            if edge.policy_id not in graph.policies:
                raise PolicyResolutionError(
                    f"edge {edge_key_str(edge.key)} has no resolvable enabling "
                    f"policy {edge.policy_id!r}; cannot scope a deny override"
                )
            result.blocks.append(
                DenyOverride(
                    edge=edge.key,
                    src_addr=graph.assets[edge.src].address,
                    dst_addr=graph.assets[edge.dst].address,
                    protocol=edge.protocol,
                    port=edge.port,
                    policy_id=edge.policy_id,
                    reason="non-compliant edge on a critical attack path",
                )
            )
        elif verdict.verdict == CLASS_COMPLIANT_CRITICAL:
            result.advisories.append(
                PolicyAdvisory(
                    edge=verdict.edge,
                    policy_id=verdict.policy_id,
                    reason="compliant edge on a critical attack path; review policy",
                )
            )
    return result


def plan_to_dict(mitigation: MitigationPlan) -> dict:
    return {
        "kind": "mitigation-plan",
        "blocks": [
            {
                "action": ACTION_DENY,
                "edge": edge_key_str(b.edge),
                "src_addr": b.src_addr,
                "dst_addr": b.dst_addr,
                "protocol": b.protocol,
                "port": b.port,
                "policy_id": b.policy_id,
                "reason": b.reason,
            }
            for b in mitigation.blocks
        ],
        "advisories": [
            {
                "action": ACTION_WARN,
                "edge": edge_key_str(a.edge),
                "policy_id": a.policy_id,
                "reason": a.reason,
            }
            for a in mitigation.advisories
        ],
    }


def plan_from_dict(data: dict) -> MitigationPlan:
    if data.get("kind") != "mitigation-plan":
        raise ValueError("not a mitigation plan document")
    blocks = [
        DenyOverride(
            edge=parse_edge_key(b["edge"]),
            src_addr=b["src_addr"],
            dst_addr=b["dst_addr"],
            protocol=b["protocol"],
            port=int(b["port"]),
            policy_id=b["policy_id"],
            reason=b["reason"],
        )
        for b in data.get("blocks", [])
    ]
    advisories = [
        PolicyAdvisory(
            edge=parse_edge_key(a["edge"]),
            policy_id=a["policy_id"],
            reason=a["reason"],
        )
        for a in data.get("advisories", [])
    ]
    return MitigationPlan(blocks=blocks, advisories=advisories)


def apply(mitigation: MitigationPlan, graph: ConnectivityGraph) -> ConnectivityGraph:
    """Return a new graph with blocked edges removed.

    The input graph is left untouched. Compliant edges are never removed,
    even if a plan names one (that block is skipped with a warning), and
    blocks for edges already absent are no-ops, so applying a plan twice
    is the same as applying it once.
    """
    blocked = mitigation.blocked_keys()
    edges = []
    for edge in graph.edges:
        if edge.key in blocked:
            if edge.compliant:
                log.warning(
                    "refusing to remove compliant edge %s", edge_key_str(edge.key)
                )
            else:
                continue
        edges.append(
            Edge(
                src=edge.src,
                dst=edge.dst,
                protocol=edge.protocol,
                port=edge.port,
                policy_id=edge.policy_id,
                compliant=edge.compliant,
            )
        )
    meta = dict(graph.meta)
    if "counts" in meta:
        counts = dict(meta["counts"])
        counts["edges"] = len(edges)
        meta["counts"] = counts
    return ConnectivityGraph(
        assets=graph.assets,
        edges=edges,
        policies=graph.policies,
        rules=graph.rules,
        service_tags=graph.service_tags,
        meta=meta,
    )
