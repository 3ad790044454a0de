"""Connectivity-graph data model and dataset file handling.

A dataset file is a single JSON document with five sections:

* ``assets``: network assets with governance tag, criticality level 0-7,
  application criticality class, and attached vulnerabilities.
* ``edges``: directed connections, one record per (src, dst, protocol, port).
* ``zt_policies``: zero-trust policies that enable connections; address
  ranges are CIDR blocks, ports are integer intervals.
* ``governance_rules``: allowed (src tag, dst tag, service tag) triples.
* ``service_tags``: (protocol, port interval) -> service tag table; the
  first matching row wins.

An optional ``meta`` section carries the generator seed, config hash, and
section counts; when present the loader cross-checks the counts.

Edge compliance flags are derived state: they are recomputed by
``governance.mark_compliance`` after loading and are not stored in the file.
"""

from __future__ import annotations

import csv
import json
from dataclasses import dataclass, field
from pathlib import Path

from .errors import (
    DanglingReferenceError,
    DatasetFormatError,
    DuplicateIdError,
)

APP_CLASSES = ("non-critical", "business-critical", "mission-critical")
CRITICALITY_MIN = 0
CRITICALITY_MAX = 7

# Reserved service tag for protocol/port pairs no service_tags row matches.
# Rule files may not use it, so an unclassifiable service is never compliant.
UNMATCHED_SERVICE_TAG = "__unmatched__"

EdgeKey = tuple[str, str, str, int]


@dataclass
class Vulnerability:
    id: str
    base_score: float  # CVSS v3 base score, 0.0-10.0
    scope_changed: bool


@dataclass
class Asset:
    id: str
    address: str  # dotted-quad address, matched against policy CIDR ranges
    tag: str  # governance tag; empty string means untagged
    criticality: int  # governance trust level 0-7; 7 marks critical assets
    app_criticality: str  # one of APP_CLASSES
    vulnerabilities: list[Vulnerability] = field(default_factory=list)


@dataclass
class Edge:
    src: str
    dst: str
    protocol: str
    port: int
    policy_id: str  # zero-trust policy that enables this connection
    compliant: bool = False  # derived; set by governance.mark_compliance

    @property
    def key(self) -> EdgeKey:
        return (self.src, self.dst, self.protocol, self.port)


@dataclass
class ZTPolicy:
    id: str
    src_range: str  # CIDR block, e.g. "10.4.0.0/16"
    dst_range: str
    protocol: str
    port_lo: int
    port_hi: int


@dataclass
class GovernanceRule:
    src_tag: str
    dst_tag: str
    service_tag: str


@dataclass
class ServiceTagRule:
    protocol: str
    port_lo: int
    port_hi: int
    tag: str


@dataclass
class ConnectivityGraph:
    assets: dict[str, Asset]
    edges: list[Edge]
    policies: dict[str, ZTPolicy]
    rules: list[GovernanceRule]
    service_tags: list[ServiceTagRule]
    meta: dict = field(default_factory=dict)

    def asset_count(self) -> int:
        return len(self.assets)

    def edge_count(self) -> int:
        return len(self.edges)

    def critical_count(self) -> int:
        return sum(1 for a in self.assets.values() if a.criticality == CRITICALITY_MAX)


def edge_key_str(key: EdgeKey) -> str:
    """Render an edge key as a single report-friendly token."""
    return "|".join(str(part) for part in key)


def parse_edge_key(text: str) -> EdgeKey:
    parts = text.split("|")
    if len(parts) != 4:
        raise DatasetFormatError(f"bad edge key {text!r}: expected src|dst|protocol|port")
    try:
        port = int(parts[3])
    except ValueError:
        raise DatasetFormatError(f"bad edge key {text!r}: port must be an integer") from None
    return (parts[0], parts[1], parts[2], port)


def _require(record: dict, name: str, context: str):
    if name not in record:
        raise DatasetFormatError(f"{context}: missing field {name!r}")
    return record[name]


def _require_str(record: dict, name: str, context: str, allow_empty: bool = False) -> str:
    value = _require(record, name, context)
    if not isinstance(value, str) or (not allow_empty and not value):
        raise DatasetFormatError(f"{context}: field {name!r} must be a non-empty string")
    return value


def _require_int(record: dict, name: str, context: str) -> int:
    value = _require(record, name, context)
    if isinstance(value, bool) or not isinstance(value, int):
        raise DatasetFormatError(f"{context}: field {name!r} must be an integer")
    return value


def _parse_vulnerability(record: dict, context: str) -> Vulnerability:
    vid = _require_str(record, "id", context)
    score = _require(record, "base_score", context)
    if not isinstance(score, (int, float)) or isinstance(score, bool):
        raise DatasetFormatError(f"{context}: field 'base_score' must be a number")
    score = float(score)
    if not 0.0 <= score <= 10.0:
        raise DatasetFormatError(f"{context}: base_score {score} outside [0.0, 10.0]")
    changed = _require(record, "scope_changed", context)
    if not isinstance(changed, bool):
        raise DatasetFormatError(f"{context}: field 'scope_changed' must be a boolean")
    return Vulnerability(id=vid, base_score=score, scope_changed=changed)


def _parse_asset(record: dict, index: int) -> Asset:
    context = f"assets[{index}]"
    aid = _require_str(record, "id", context)
    address = _require_str(record, "address", context)
    tag = _require_str(record, "tag", context, allow_empty=True)
    criticality = _require_int(record, "criticality", context)
    if not CRITICALITY_MIN <= criticality <= CRITICALITY_MAX:
        raise DatasetFormatError(
            f"{context}: criticality {criticality} outside "
            f"[{CRITICALITY_MIN}, {CRITICALITY_MAX}]"
        )
    app = _require_str(record, "app_criticality", context)
    if app not in APP_CLASSES:
        raise DatasetFormatError(
            f"{context}: app_criticality {app!r} not one of {', '.join(APP_CLASSES)}"
        )
    vulns = record.get("vulnerabilities", [])
    if not isinstance(vulns, list):
        raise DatasetFormatError(f"{context}: field 'vulnerabilities' must be a list")
    parsed = []
    seen = set()
    for j, v in enumerate(vulns):
        vuln = _parse_vulnerability(v, f"{context}.vulnerabilities[{j}]")
        if vuln.id in seen:
            raise DuplicateIdError(f"{context}: duplicate vulnerability id {vuln.id!r}")
        seen.add(vuln.id)
        parsed.append(vuln)
    return Asset(
        id=aid,
        address=address,
        tag=tag,
        criticality=criticality,
        app_criticality=app,
        vulnerabilities=parsed,
    )


def load_dataset(path: str | Path) -> ConnectivityGraph:
    """Load and validate a dataset file.

    Raises DatasetFormatError for malformed content (with line/field
    context), DuplicateIdError for repeated ids, and
    DanglingReferenceError when an edge names a missing asset or policy.
    """
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise DatasetFormatError(f"{path}: cannot read dataset: {exc}") from exc
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise DatasetFormatError(
            f"{path}: invalid JSON at line {exc.lineno} column {exc.colno}: {exc.msg}"
        ) from exc
    if not isinstance(doc, dict):
        raise DatasetFormatError(f"{path}: top level must be a JSON object")

    for section in ("assets", "edges", "zt_policies", "governance_rules", "service_tags"):
        if section not in doc:
            raise DatasetFormatError(f"{path}: missing section {section!r}")
        if not isinstance(doc[section], list):
            raise DatasetFormatError(f"{path}: section {section!r} must be a list")

    assets: dict[str, Asset] = {}
    for i, record in enumerate(doc["assets"]):
        asset = _parse_asset(record, i)
        if asset.id in assets:
            raise DuplicateIdError(f"assets[{i}]: duplicate asset id {asset.id!r}")
        assets[asset.id] = asset

    policies: dict[str, ZTPolicy] = {}
    for i, record in enumerate(doc["zt_policies"]):
        context = f"zt_policies[{i}]"
        policy = ZTPolicy(
            id=_require_str(record, "id", context),
            src_range=_require_str(record, "src_range", context),
            dst_range=_require_str(record, "dst_range", context),
            protocol=_require_str(record, "protocol", context),
            port_lo=_require_int(record, "port_lo", context),
            port_hi=_require_int(record, "port_hi", context),
        )
        if policy.id in policies:
            raise DuplicateIdError(f"{context}: duplicate policy id {policy.id!r}")
        policies[policy.id] = policy

    edges: list[Edge] = []
    seen_keys: set[EdgeKey] = set()
    for i, record in enumerate(doc["edges"]):
        context = f"edges[{i}]"
        edge = Edge(
            src=_require_str(record, "src", context),
            dst=_require_str(record, "dst", context),
            protocol=_require_str(record, "protocol", context),
            port=_require_int(record, "port", context),
            policy_id=_require_str(record, "policy_id", context),
        )
        if edge.src not in assets:
            raise DanglingReferenceError(f"{context}: unknown source asset {edge.src!r}")
        if edge.dst not in assets:
            raise DanglingReferenceError(f"{context}: unknown destination asset {edge.dst!r}")
        if edge.policy_id not in policies:
            raise DanglingReferenceError(f"{context}: unknown policy {edge.policy_id!r}")
        if edge.key in seen_keys:
            raise DuplicateIdError(f"{context}: duplicate edge {edge_key_str(edge.key)}")
        seen_keys.add(edge.key)
        edges.append(edge)

    rules = []
    for i, record in enumerate(doc["governance_rules"]):
        context = f"governance_rules[{i}]"
        rule = GovernanceRule(
            src_tag=_require_str(record, "src_tag", context),
            dst_tag=_require_str(record, "dst_tag", context),
            service_tag=_require_str(record, "service_tag", context),
        )
        if rule.service_tag == UNMATCHED_SERVICE_TAG:
            raise DatasetFormatError(
                f"{context}: service tag {UNMATCHED_SERVICE_TAG!r} is reserved "
                "for unclassifiable services and cannot appear in a rule"
            )
        rules.append(rule)

    service_tags = []
    for i, record in enumerate(doc["service_tags"]):
        context = f"service_tags[{i}]"
        row = ServiceTagRule(
            protocol=_require_str(record, "protocol", context),
            port_lo=_require_int(record, "port_lo", context),
            port_hi=_require_int(record, "port_hi", context),
            tag=_require_str(record, "tag", context),
        )
        if row.port_lo > row.port_hi:
            raise DatasetFormatError(f"{context}: empty port interval")
        service_tags.append(row)

    meta = doc.get("meta", {})
    if not isinstance(meta, dict):
        raise DatasetFormatError(f"{path}: section 'meta' must be an object")

    graph = ConnectivityGraph(
        assets=assets,
        edges=edges,
        policies=policies,
        rules=rules,
        service_tags=service_tags,
        meta=meta,
    )

    counts = meta.get("counts")
    if counts:
        recorded = (
            counts.get("assets"),
            counts.get("edges"),
            counts.get("critical_assets"),
        )
        actual = (graph.asset_count(), graph.edge_count(), graph.critical_count())
        if recorded != actual:
            raise DatasetFormatError(
                f"{path}: meta counts {recorded} do not match file contents {actual}"
            )
    return graph


def graph_to_dict(graph: ConnectivityGraph) -> dict:
    doc = {
        "assets": [
            {
                "id": a.id,
                "address": a.address,
                "tag": a.tag,
                "criticality": a.criticality,
                "app_criticality": a.app_criticality,
                "vulnerabilities": [
                    {
                        "id": v.id,
                        "base_score": v.base_score,
                        "scope_changed": v.scope_changed,
                    }
                    for v in a.vulnerabilities
                ],
            }
            for a in graph.assets.values()
        ],
        "edges": [
            {
                "src": e.src,
                "dst": e.dst,
                "protocol": e.protocol,
                "port": e.port,
                "policy_id": e.policy_id,
            }
            for e in graph.edges
        ],
        "zt_policies": [
            {
                "id": p.id,
                "src_range": p.src_range,
                "dst_range": p.dst_range,
                "protocol": p.protocol,
                "port_lo": p.port_lo,
                "port_hi": p.port_hi,
            }
            for p in graph.policies.values()
        ],
        "governance_rules": [
            {"src_tag": r.src_tag, "dst_tag": r.dst_tag, "service_tag": r.service_tag}
            for r in graph.rules
        ],
        "service_tags": [
            {"protocol": s.protocol, "port_lo": s.port_lo, "port_hi": s.port_hi, "tag": s.tag}
            for s in graph.service_tags
        ],
    }
    if graph.meta:
        doc["meta"] = graph.meta
    return doc


def save_dataset(graph: ConnectivityGraph, path: str | Path) -> None:
    """Write a dataset file; load_dataset(save_dataset(g)) == g."""
    path = Path(path)
    doc = graph_to_dict(graph)
    path.write_text(json.dumps(doc, indent=1, sort_keys=True) + "\n")


def ingest_scan(graph: ConnectivityGraph, path: str | Path) -> int:
    """Attach vulnerabilities from a scan file to graph assets.

    The scan file is CSV with header asset_id,vuln_id,base_score,scope_changed.
    Ingest is idempotent: a vulnerability id already present on the asset is
    skipped, so re-ingesting the same file changes nothing. Returns the
    number of vulnerabilities added.
    """
    path = Path(path)
    added = 0
    with open(path, newline="") as handle:
        reader = csv.reader(handle)
        try:
            header = next(reader)
        except StopIteration:
            raise DatasetFormatError(f"{path}: empty scan file") from None
        expected = ["asset_id", "vuln_id", "base_score", "scope_changed"]
        if [h.strip() for h in header] != expected:
            raise DatasetFormatError(
                f"{path} line 1: header must be {','.join(expected)}"
            )
        for lineno, row in enumerate(reader, start=2):
            if not row or all(not cell.strip() for cell in row):
                continue
            if len(row) != 4:
                raise DatasetFormatError(f"{path} line {lineno}: expected 4 fields, got {len(row)}")
            asset_id, vuln_id, score_text, changed_text = (cell.strip() for cell in row)
            asset = graph.assets.get(asset_id)
            if asset is None:
                raise DanglingReferenceError(
                    f"{path} line {lineno}: unknown asset {asset_id!r}"
                )
            try:
                score = float(score_text)
            except ValueError:
                raise DatasetFormatError(
                    f"{path} line {lineno}: base_score {score_text!r} is not a number"
                ) from None
            if not 0.0 <= score <= 10.0:
                raise DatasetFormatError(
                    f"{path} line {lineno}: base_score {score} outside [0.0, 10.0]"
                )
            lowered = changed_text.lower()
            if lowered in ("true", "1"):
                changed = True
            elif lowered in ("false", "0"):
                changed = False
            else:
                raise DatasetFormatError(
                    f"{path} line {lineno}: scope_changed {changed_text!r} "
                    "must be true/false"
                )
            if any(v.id == vuln_id for v in asset.vulnerabilities):
                continue
            asset.vulnerabilities.append(
                Vulnerability(id=vuln_id, base_score=score, scope_changed=changed)
            )
            added += 1
    return added
