"""Zero-trust governance: service tagging, compliance marking, criticality.

An edge is compliant when the triple (source asset tag, destination asset
tag, service tag of its protocol/port) appears in the governance rule set.
Untagged assets are treated as trust level 0 and their edges can never be
compliant; a warning is recorded for each one encountered.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field

from .netgraph import (
    CRITICALITY_MAX,
    UNMATCHED_SERVICE_TAG,
    ConnectivityGraph,
    Edge,
    EdgeKey,
    ServiceTagRule,
)

log = logging.getLogger(__name__)

# Governance level assumed for assets with an empty tag.
UNTAGGED_LEVEL = 0
UNTAGGED_NAME = "UnTagged"


def service_tag_for(edge: Edge, table: list[ServiceTagRule]) -> str:
    """Map an edge's protocol/port to a service tag; first matching row wins."""
    for row in table:
        if row.protocol == edge.protocol and row.port_lo <= edge.port <= row.port_hi:
            return row.tag
    return UNMATCHED_SERVICE_TAG


def critical_assets(graph: ConnectivityGraph) -> set[str]:
    """Ids of assets at the highest criticality level."""
    return {a.id for a in graph.assets.values() if a.criticality == CRITICALITY_MAX}


@dataclass
class ComplianceReport:
    compliant: set[EdgeKey] = field(default_factory=set)
    noncompliant: set[EdgeKey] = field(default_factory=set)
    warnings: list[str] = field(default_factory=list)

    @property
    def compliant_count(self) -> int:
        return len(self.compliant)

    @property
    def noncompliant_count(self) -> int:
        return len(self.noncompliant)


def mark_compliance(graph: ConnectivityGraph) -> ComplianceReport:
    """Set every edge's compliant flag and report the partition.

    Pure with respect to everything except the edge flags: assets, rules,
    and policies are never modified, and calling this twice yields the
    same partition.
    """
    # the loader rejects rules naming the reserved tag; filtering here keeps
    # the invariant for graphs built in memory too
    allowed = {
        (r.src_tag, r.dst_tag, r.service_tag)
        for r in graph.rules
        if r.service_tag != UNMATCHED_SERVICE_TAG
    }
    report = ComplianceReport()
    warned: set[str] = set()
    for edge in graph.edges:
        src = graph.assets[edge.src]
        dst = graph.assets[edge.dst]
        untagged = [a for a in (src, dst) if not a.tag]
        for asset in untagged:
            if asset.id not in warned:
                warned.add(asset.id)
                message = (
                    f"asset {asset.id} has no governance tag; treating as "
                    f"{UNTAGGED_NAME} (level {UNTAGGED_LEVEL}), its edges are "
                    "non-compliant"
                )
                report.warnings.append(message)
                log.warning(message)
        if untagged:
            edge.compliant = False
        else:
            service = service_tag_for(edge, graph.service_tags)
            edge.compliant = (src.tag, dst.tag, service) in allowed
        if edge.compliant:
            report.compliant.add(edge.key)
        else:
            report.noncompliant.add(edge.key)
    return report
