"""Deterministic synthetic enterprise-network generator with labelled ground truth.

The generator builds a connectivity graph around curated structures whose
attack-surface features are known by construction ("promised"), then pads
with organic chains, feeders and bulk non-surface edges until the exact
node/edge/compliance counts requested by the spec are met.  After assembly
the real governance/filter/oracle pipeline re-derives everything and every
promise is cross-checked, so a generated dataset is self-verifying.

Curated structure catalogue (full coverage mode):

* chains    -- vulnerable paths of length 5 ending at a critical asset;
               pin feature cells for hop distances 2..5.
* feeders   -- single hops into critical assets; pin distance-1 cells with
               a top-criticality destination, including the vuln-free band.
* side taps -- distance-1 nodes that also branch into an existing chain;
               pin distance-1 cells with non-top destination criticality.
* gadgets   -- vulnerable nodes whose edges all lead to dead ends; pin the
               "no critical asset reachable" bucket.
* laterals  -- unreachable criticals with edges into other criticals; pin
               the same bucket with a top-criticality destination.

Construction keeps one invariant the edge classifier depends on: the class
of a surface edge is a function of its banded features.  Concretely, every
intermediate node of a qualifying attack path has mission-critical app
class, every vulnerable band-5-6 node is reachable from a path start, and
no cross edge exceeds the walk-length budget.  A strict cell-consistency
check enforces this at generation time.
"""

from __future__ import annotations

import csv
import hashlib
import json
import math
from dataclasses import dataclass, field, asdict
from pathlib import Path

import numpy as np

from .errors import SpecInfeasibleError
from .netgraph import (
    APP_CLASSES,
    CRITICALITY_MAX,
    Asset,
    ConnectivityGraph,
    Edge,
    GovernanceRule,
    ServiceTagRule,
    Vulnerability,
    ZTPolicy,
    edge_key_str,
)
from . import governance, oracle, preprocess, triage

# Tag -> criticality tier, also used for address blocks (10.<tier>.x.y).
TIER_LEVEL = {
    "Internet": 1,
    "Vendor": 2,
    "DMZ": 3,
    "User": 4,
    "WebServer": 5,
    "AppServer": 6,
    "Database": 7,
}
LOW_TIERS = ("User", "DMZ")             # criticality <= 4: possible path starts
MID_TIERS = ("WebServer", "AppServer")  # criticality 5-6: never path starts
CRITICAL_TIER = "Database"

APP_MISSION, APP_BUSINESS, APP_NON = (
    "mission-critical",
    "business-critical",
    "non-critical",
)
_APP_BY_CODE = {2: APP_MISSION, 1: APP_BUSINESS, 0: APP_NON}
_CODE_BY_APP = {app: code for code, app in _APP_BY_CODE.items()}

# Services that governance rules may whitelist.
_SERVICES_RULED = (
    ("tcp", 443, "SecureWeb"),
    ("tcp", 80, "Web"),
    ("tcp", 8080, "AppWeb"),
    ("tcp", 3306, "SQL"),
    ("tcp", 5432, "SQL"),
    ("udp", 53, "DNS"),
    ("tcp", 22, "SSH"),
)
# Services that are tagged but never appear in a governance rule.
_SERVICES_UNRULED = (
    ("tcp", 23, "Telnet"),
    ("tcp", 445, "SMB"),
    ("tcp", 3389, "RDP"),
)
# Ports with no service-tag mapping at all.
_SERVICES_UNMAPPED = (
    ("tcp", 4444, None),
    ("tcp", 9999, None),
    ("udp", 6667, None),
)
_NONCOMPLIANT_POOL = _SERVICES_UNRULED + _SERVICES_UNMAPPED

# Organic chain lengths, weighted toward the depths that need sample mass.
_CHAIN_LENGTH_CYCLE = (3, 4, 2, 5, 3, 4, 2, 5, 4, 3, 5, 2, 4, 5, 3)
_CHAIN_APP_CYCLE = (APP_MISSION, APP_MISSION, APP_BUSINESS)


def cell_id(f1_band: str, f2: int, f3_band: str, f4_bucket: str, f5: int) -> str:
    """Canonical name for one banded feature combination."""
    return f"f1={f1_band}|f2={f2}|f3={f3_band}|f4={f4_bucket}|f5={f5}"


@dataclass(frozen=True)
class GenSpec:
    """Exact shape of a generated dataset; all counts are hard requirements."""

    name: str
    seed: int
    nodes: int
    edges: int
    critical: int
    compliant_edges: int
    coverage: str = "full"  # full | basic | mission
    self_loops: int = 0
    vulnerable_assets: int | None = None  # exact count, or None for organic
    vulnerable_criticals: int = 0
    noise_vuln_rate: float = 0.0  # sub-threshold vulns on otherwise clean assets
    mission_fraction: float = 0.6
    business_fraction: float = 0.25

    def validate(self) -> None:
        if self.nodes < 12 or not 3 <= self.critical < self.nodes:
            raise SpecInfeasibleError(f"{self.name}: node/critical counts unusable")
        if self.edges < 1 or not 0 <= self.compliant_edges <= self.edges:
            raise SpecInfeasibleError(f"{self.name}: edge/compliance counts unusable")
        if self.coverage not in ("full", "basic", "mission"):
            raise SpecInfeasibleError(f"{self.name}: unknown coverage {self.coverage!r}")
        if self.self_loops < 0:
            raise SpecInfeasibleError(f"{self.name}: negative self_loops")
        if self.coverage == "mission" and self.vulnerable_assets is None:
            raise SpecInfeasibleError(
                f"{self.name}: mission coverage needs an exact vulnerable budget"
            )
        if self.coverage != "mission" and self.vulnerable_assets is not None:
            raise SpecInfeasibleError(
                f"{self.name}: exact vulnerable budgets need mission coverage"
            )
        if not 0.0 <= self.noise_vuln_rate < 1.0:
            raise SpecInfeasibleError(f"{self.name}: noise_vuln_rate out of range")

    def config_hash(self) -> str:
        blob = json.dumps(asdict(self), sort_keys=True).encode()
        return hashlib.sha256(blob).hexdigest()[:16]


def std1_spec(seed: int = 11) -> GenSpec:
    """Training-scale network: 864 assets, 5018 flows, 284 critical assets."""
    return GenSpec(
        name="std1", seed=seed, nodes=864, edges=5018, critical=284,
        compliant_edges=2002, coverage="full", self_loops=40,
        noise_vuln_rate=0.03,
    )


def std2_spec(seed: int = 29) -> GenSpec:
    """Sibling of std1 with slightly different counts; used for transfer."""
    return GenSpec(
        name="std2", seed=seed, nodes=865, edges=5023, critical=284,
        compliant_edges=2002, coverage="full", self_loops=40,
        noise_vuln_rate=0.03,
    )


def rtd2_spec(seed: int = 47) -> GenSpec:
    """Dense operational-scale network: 370 assets, 21802 flows, 70 critical
    assets, exactly 44 vulnerable assets (6 critical), all on attack paths."""
    return GenSpec(
        name="rtd2", seed=seed, nodes=370, edges=21802, critical=70,
        compliant_edges=10901, coverage="mission", self_loops=0,
        vulnerable_assets=44, vulnerable_criticals=6,
    )


def small_spec(seed: int = 5, name: str = "small") -> GenSpec:
    """Compact dataset for fast tests."""
    return GenSpec(
        name=name, seed=seed, nodes=150, edges=700, critical=40,
        compliant_edges=280, coverage="basic", self_loops=0,
    )


def selfloop_spec(seed: int = 5, name: str = "selfloop") -> GenSpec:
    """Mid-size dataset with a heavy self-loop burden for the ablation study."""
    return GenSpec(
        name=name, seed=seed, nodes=300, edges=1500, critical=80,
        compliant_edges=600, coverage="basic", self_loops=100,
    )


PRESETS = {
    "std1": std1_spec,
    "std2": std2_spec,
    "rtd2": rtd2_spec,
    "small": small_spec,
    "selfloop": selfloop_spec,
}


@dataclass
class GroundTruth:
    """Oracle answers for a generated dataset, for evaluation and tests."""

    surface_nodes: list[str]
    distances: dict[str, int | None]  # None: no critical asset reachable
    critical_edges: list[str]
    edge_classes: dict[str, str]
    vulnerable_assets: list[str]
    compromised_assets: list[str]
    required_cells: list[str]
    populated_cells: dict[str, int]

    def to_dict(self) -> dict:
        return {
            "kind": "ground-truth",
            "surface_nodes": self.surface_nodes,
            "distances": self.distances,
            "critical_edges": self.critical_edges,
            "edge_classes": self.edge_classes,
            "vulnerable_assets": self.vulnerable_assets,
            "compromised_assets": self.compromised_assets,
            "required_cells": self.required_cells,
            "populated_cells": self.populated_cells,
        }

    @classmethod
    def from_dict(cls, data: dict) -> "GroundTruth":
        if data.get("kind") != "ground-truth":
            raise ValueError("not a ground-truth document")
        return cls(
            surface_nodes=list(data["surface_nodes"]),
            distances={
                k: (None if v is None else int(v))
                for k, v in data["distances"].items()
            },
            critical_edges=list(data["critical_edges"]),
            edge_classes=dict(data["edge_classes"]),
            vulnerable_assets=list(data["vulnerable_assets"]),
            compromised_assets=list(data["compromised_assets"]),
            required_cells=list(data["required_cells"]),
            populated_cells=dict(data["populated_cells"]),
        )

    def save(self, path: str | Path) -> None:
        Path(path).write_text(json.dumps(self.to_dict(), indent=1, sort_keys=True) + "\n")

    @classmethod
    def load(cls, path: str | Path) -> "GroundTruth":
        return cls.from_dict(json.loads(Path(path).read_text()))


@dataclass
class CoverageReport:
    """Which feature cells the generator promised vs. what the data contains."""

    required: list[str]
    populated: dict[str, int]

    @property
    def missing(self) -> list[str]:
        return sorted(c for c in self.required if self.populated.get(c, 0) == 0)

    def write_csv(self, path: str | Path) -> None:
        with open(path, "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(["cell", "required", "count"])
            req = set(self.required)
            for cell in sorted(set(self.required) | set(self.populated)):
                writer.writerow([cell, int(cell in req), self.populated.get(cell, 0)])


@dataclass
class GenResult:
    graph: ConnectivityGraph
    truth: GroundTruth
    coverage: CoverageReport


@dataclass
class _Node:
    id: str
    tag: str
    level: int
    address: str
    app: str
    role: str
    vulns: list[Vulnerability] = field(default_factory=list)


@dataclass
class _EdgeRec:
    src: str
    dst: str
    f5: int | None  # pinned compliance, or None for quota assignment
    role: str


class _GenerationError(RuntimeError):
    """Internal invariant broke during generation; indicates a builder bug."""


class _Builder:
    def __init__(self, spec: GenSpec):
        self.spec = spec
        self.rng = np.random.default_rng(spec.seed)
        self.nodes: list[_Node] = []
        self.by_id: dict[str, _Node] = {}
        self.edges: list[_EdgeRec] = []
        self.pairs: set[tuple[str, str]] = set()
        self.tier_counts = {t: 0 for t in TIER_LEVEL}
        self.critical_ids: list[str] = []
        self.critical_by_app: dict[str, list[str]] = {a: [] for a in APP_CLASSES}
        self.needs_inedge: list[str] = []
        self.qual_vuln_ids: set[str] = set()   # carry an edge-qualifying vuln
        self.noise_vuln_ids: set[str] = set()  # carry only sub-threshold vulns
        self.reserved_laterals: list[str] = []  # never handed out as terminals
        self.promises: list[tuple[int, str]] = []  # (edge index, cell id)
        # (app code, criticality band) -> [(node id, hops to critical)]
        self.chain_registry: dict[tuple[int, str], list[tuple[str, int]]] = {}

    @property
    def vuln_ids(self) -> set[str]:
        return self.qual_vuln_ids | self.noise_vuln_ids

    # -- node/edge primitives ----------------------------------------------

    def new_node(self, tier: str, app: str, role: str) -> _Node:
        idx = self.tier_counts[tier]
        self.tier_counts[tier] += 1
        addr = f"10.{TIER_LEVEL[tier]}.{idx // 200}.{idx % 200 + 1}"
        node = _Node(
            id=f"A{len(self.nodes) + 1:04d}",
            tag=tier,
            level=TIER_LEVEL[tier],
            address=addr,
            app=app,
            role=role,
        )
        self.nodes.append(node)
        self.by_id[node.id] = node
        return node

    def low_node(self, app: str, role: str) -> _Node:
        tier = LOW_TIERS[int(self.rng.integers(len(LOW_TIERS)))]
        return self.new_node(tier, app, role)

    def band_node(self, band: str, app: str, role: str) -> _Node:
        pool = LOW_TIERS if band == "0-4" else MID_TIERS
        tier = pool[int(self.rng.integers(len(pool)))]
        return self.new_node(tier, app, role)

    def add_vuln(self, node: _Node, band: str) -> None:
        if band == "high":
            score = round(float(self.rng.uniform(7.0, 8.85)), 1)
        elif band == "critical":
            score = min(round(float(self.rng.uniform(9.0, 10.0)), 1), 10.0)
        else:  # sub-threshold noise: never qualifies an edge
            score = round(float(self.rng.uniform(1.0, 6.4)), 1)
        vuln = Vulnerability(
            id=f"V-{node.id}-{len(node.vulns) + 1}",
            base_score=score,
            scope_changed=True if band in ("high", "critical") else bool(self.rng.integers(2)),
        )
        node.vulns.append(vuln)
        if band in ("high", "critical"):
            self.qual_vuln_ids.add(node.id)
        else:
            self.noise_vuln_ids.add(node.id)

    def add_edge(self, src: str, dst: str, f5: int | None, role: str,
                 promise: str | None = None, allow_parallel: bool = False) -> None:
        pair = (src, dst)
        if pair in self.pairs and not allow_parallel:
            raise _GenerationError(f"duplicate pair {pair} from role {role}")
        self.pairs.add(pair)
        self.edges.append(_EdgeRec(src=src, dst=dst, f5=f5, role=role))
        if promise is not None:
            self.promises.append((len(self.edges) - 1, promise))

    # -- critical asset pool -------------------------------------------------

    def make_criticals(self) -> None:
        spec = self.spec
        n_mission = max(1, round(spec.mission_fraction * spec.critical))
        n_business = max(1, round(spec.business_fraction * spec.critical))
        n_non = spec.critical - n_mission - n_business
        if n_non < 1:
            raise SpecInfeasibleError(f"{spec.name}: critical count too small for app mix")
        apps = [APP_MISSION] * n_mission + [APP_BUSINESS] * n_business + [APP_NON] * n_non
        for app in apps:
            node = self.new_node(CRITICAL_TIER, app, "critical")
            self.critical_ids.append(node.id)
            self.critical_by_app[app].append(node.id)
            self.needs_inedge.append(node.id)
        if self.spec.coverage == "full":
            # lateral sources gain outgoing edges, which would change the
            # class of any chain ending on them; keep them out of the pool
            self.reserved_laterals = self.critical_by_app[APP_BUSINESS][-3:]

    def take_critical(self, app: str, exclude: set[str] = frozenset()) -> str:
        """Pick a critical asset of the given app class, preferring ones that
        still lack an in-edge so the whole pool ends up attached."""
        reserved = set(self.reserved_laterals)
        for cid in self.needs_inedge:
            if self.by_id[cid].app == app and cid not in exclude and cid not in reserved:
                self.needs_inedge.remove(cid)
                return cid
        pool = [
            c for c in self.critical_by_app[app]
            if c not in exclude and c not in reserved
        ]
        if not pool:
            raise SpecInfeasibleError(f"{self.spec.name}: no critical assets of app {app}")
        return pool[int(self.rng.integers(len(pool)))]

    # -- curated coverage structures ------------------------------------------

    def build_chain(self, length: int, app: str, mid_band: str | None,
                    vuln_band_of, f5_of, promise_cells: bool) -> list[str]:
        """One attack chain node@length -> ... -> node@1 -> critical asset.

        mid_band fixes the criticality band of nodes below the head (None
        randomises it); vuln_band_of(depth) picks vulnerability severity and
        f5_of(depth) the pinned compliance (may return None) per hop.
        """
        f2 = _CODE_BY_APP[app]
        if mid_band is None:
            # one band for the whole chain: nodes in the 0-4 band are
            # possible path starts themselves, so mixing bands inside a
            # chain would give same-cell edges different walk lengths
            mid_band = "0-4" if self.rng.integers(2) else "5-6"
        ids: list[str] = []
        for depth in range(length, 0, -1):
            if depth == length:
                node = self.low_node(app, "chain")  # heads can start a path
            else:
                node = self.band_node(mid_band, app, "chain")
            self.add_vuln(node, vuln_band_of(depth))
            ids.append(node.id)
        terminal = self.take_critical(app)
        for i, depth in enumerate(range(length, 0, -1)):
            src = ids[i]
            dst = ids[i + 1] if depth > 1 else terminal
            f5 = f5_of(depth)
            promise = None
            if promise_cells:
                dst_band = triage.band_f1(self.by_id[dst].level)
                src_score = max(v.base_score for v in self.by_id[src].vulns)
                promise = cell_id(dst_band, f2, triage.band_f3(src_score), str(depth), f5)
            self.add_edge(src, dst, f5, "chain", promise=promise)
        for i, depth in enumerate(range(length, 0, -1)):
            band = triage.band_f1(self.by_id[ids[i]].level)
            self.chain_registry.setdefault((f2, band), []).append((ids[i], depth))
        return ids

    def cov_chains_full(self) -> None:
        for f2 in (2, 1, 0):
            app = _APP_BY_CODE[f2]
            for mid_band in ("0-4", "5-6"):
                for vband in ("high", "critical"):
                    for f5 in (0, 1):
                        self.build_chain(
                            length=5, app=app, mid_band=mid_band,
                            vuln_band_of=lambda d, b=vband: b,
                            f5_of=lambda d, v=f5: v,
                            promise_cells=True,
                        )

    def cov_pure_feeders(self, f2_codes=(2, 1, 0)) -> None:
        # non-vulnerable sources: cover the "no qualifying vuln" band
        for f2 in f2_codes:
            for f5 in (0, 1):
                feeder = self.low_node(APP_BUSINESS, "feeder")
                target = self.take_critical(_APP_BY_CODE[f2])
                self.add_edge(feeder.id, target, f5, "feeder",
                              promise=cell_id("7", f2, "none", "1", f5))

    def cov_side_taps(self) -> None:
        """Distance-1 sources with an extra edge into an existing chain.

        Covers distance-1 cells whose destination is not a critical asset.
        The tap is always a possible path start and the chain node sits at
        most 4 hops from a critical asset, so mission-bound taps stay inside
        the walk-length budget and the cell-class invariant holds.
        """
        for f2 in (2, 1, 0):
            for band in ("0-4", "5-6"):
                for vband in ("high", "critical"):
                    for f5 in (0, 1):
                        tap = self.low_node(APP_BUSINESS, "side")
                        self.add_vuln(tap, vband)
                        anchor = self.take_critical(APP_MISSION)
                        self.add_edge(tap.id, anchor, None, "side-anchor")
                        pool = [nid for nid, depth in self.chain_registry.get((f2, band), [])
                                if depth <= 4]
                        if not pool:
                            raise _GenerationError(f"no chain node for side tap {(f2, band)}")
                        w = pool[int(self.rng.integers(len(pool)))]
                        self.add_edge(tap.id, w, f5, "side",
                                      promise=cell_id(band, f2, vband, "1", f5))

    def cov_gadgets(self, bands=("0-4", "5-6"), f2_codes=(2, 1, 0),
                    vbands=("high", "critical")) -> None:
        # vulnerable sources whose every edge dead-ends: nothing critical in
        # reach, so their hop-distance bucket is "beyond"
        sinks: dict[tuple[str, int], str] = {}
        for band in bands:
            for f2 in f2_codes:
                node = self.band_node(band, _APP_BY_CODE[f2], "sink")
                sinks[(band, f2)] = node.id
        for vband in vbands:
            g = self.low_node(APP_BUSINESS, "gadget")
            self.add_vuln(g, vband)
            for (band, f2), sink in sorted(sinks.items()):
                for f5 in (0, 1):
                    self.add_edge(g.id, sink, f5, "gadget",
                                  promise=cell_id(band, f2, vband, "beyond", f5),
                                  allow_parallel=True)

    def cov_laterals(self) -> None:
        # critical-to-critical edges from an unreachable source: covers the
        # top-criticality destination with the "beyond" distance bucket
        for c1, vband in zip(self.reserved_laterals, ("none", "high", "critical")):
            if c1 in self.needs_inedge:
                self.needs_inedge.remove(c1)
            if vband != "none":
                self.add_vuln(self.by_id[c1], vband)
            # feeders sit in the 5-6 band so the lateral source stays
            # unreachable from any path start
            for _ in range(2):
                tier = MID_TIERS[int(self.rng.integers(len(MID_TIERS)))]
                feeder = self.new_node(tier, APP_BUSINESS, "feeder-mid")
                self.add_edge(feeder.id, c1, None, "lateral-feeder")
            seen: set[str] = {c1}
            for f2 in (2, 1, 0):
                for f5 in (0, 1):
                    c2 = self.take_critical(_APP_BY_CODE[f2], exclude=seen)
                    seen.add(c2)
                    self.add_edge(c1, c2, f5, "lateral",
                                  promise=cell_id("7", f2, vband, "beyond", f5))

    def cov_basic(self) -> None:
        # two mission chains pin hop cells for both compliance values
        for f5 in (0, 1):
            self.build_chain(length=5, app=APP_MISSION, mid_band="5-6",
                             vuln_band_of=lambda d: "high",
                             f5_of=lambda d, v=f5: v, promise_cells=True)
        self.build_chain(length=3, app=APP_BUSINESS, mid_band="0-4",
                         vuln_band_of=lambda d: "critical",
                         f5_of=lambda d: d % 2, promise_cells=True)
        self.cov_pure_feeders(f2_codes=(2,))
        self.cov_gadgets(bands=("5-6",), f2_codes=(2, 1), vbands=("high",))

    def cov_mission(self) -> None:
        """Chains only; every vulnerable asset lands on a critical path."""
        spec = self.spec
        budget = spec.vulnerable_assets - spec.vulnerable_criticals
        if budget < 1:
            raise SpecInfeasibleError(f"{spec.name}: vulnerable budget too small")
        lengths: list[int] = []
        cycle = (5, 4, 3, 3, 2)
        remaining = budget
        i = 0
        while remaining > 0:
            length = min(cycle[i % len(cycle)], remaining)
            lengths.append(length)
            remaining -= length
            i += 1
        if len(lengths) < spec.vulnerable_criticals:
            raise SpecInfeasibleError(
                f"{spec.name}: not enough chains to host vulnerable criticals")
        terminals: list[str] = []
        for j, length in enumerate(lengths):
            self.build_chain(length=length, app=APP_MISSION, mid_band=None,
                             vuln_band_of=lambda d, j=j: "critical" if (d + j) % 3 == 0 else "high",
                             f5_of=lambda d, v=j % 2: v, promise_cells=True)
            terminals.append(self.edges[-1].dst)
        # vulnerable criticals are chain terminals, so their vulnerabilities
        # sit on attack paths too
        chosen = sorted(set(terminals))[: spec.vulnerable_criticals]
        if len(chosen) < spec.vulnerable_criticals:
            raise SpecInfeasibleError(
                f"{spec.name}: terminals insufficient for vulnerable criticals")
        for k, cid in enumerate(chosen):
            self.add_vuln(self.by_id[cid], "critical" if k % 2 else "high")

    # -- organic fill ----------------------------------------------------------

    def organic_feeders(self) -> None:
        # attach every critical asset still lacking an in-edge
        remaining = list(self.needs_inedge)
        self.needs_inedge.clear()
        for i in range(0, len(remaining), 2):
            feeder = self.low_node(APP_BUSINESS, "feeder")
            for cid in remaining[i:i + 2]:
                self.add_edge(feeder.id, cid, None, "feeder")

    def organic_chains(self, node_budget: int) -> None:
        i = 0
        while node_budget >= 1:
            length = min(_CHAIN_LENGTH_CYCLE[i % len(_CHAIN_LENGTH_CYCLE)], node_budget)
            app = _CHAIN_APP_CYCLE[i % len(_CHAIN_APP_CYCLE)]
            self.build_chain(length=length, app=app, mid_band=None,
                             vuln_band_of=lambda d: "high" if self.rng.integers(2) else "critical",
                             f5_of=lambda d: None, promise_cells=False)
            node_budget -= length
            i += 1

    def extra_feeders(self, count: int) -> None:
        # thicken the distance-1 class without touching the vulnerable budget
        pool = self.critical_by_app[APP_BUSINESS] + self.critical_by_app[APP_NON]
        for _ in range(count):
            feeder = self.low_node(APP_BUSINESS, "feeder")
            cid = pool[int(self.rng.integers(len(pool)))]
            if (feeder.id, cid) not in self.pairs:
                self.add_edge(feeder.id, cid, None, "feeder")

    def noise_vulns(self) -> None:
        rate = self.spec.noise_vuln_rate
        if rate <= 0:
            return
        clean = sorted(nid for nid in self.by_id if nid not in self.vuln_ids)
        n = int(round(rate * len(clean)))
        if n == 0:
            return
        for nid in self.rng.choice(np.array(clean), size=n, replace=False):
            self.add_vuln(self.by_id[str(nid)], "noise")

    def self_loops(self) -> None:
        count = self.spec.self_loops
        if count == 0:
            return
        # hosts must carry a qualifying vuln or be critical (so the loop is
        # part of the attack surface) and already have another surface edge
        # (so removing loops never drops a node)
        pool = sorted(self.qual_vuln_ids | set(self.critical_ids))
        if len(pool) < count:
            raise SpecInfeasibleError(
                f"{self.spec.name}: only {len(pool)} hosts available for "
                f"{count} self loops")
        for host in self.rng.choice(np.array(pool), size=count, replace=False):
            self.add_edge(str(host), str(host), None, "loop")

    def bulk(self) -> None:
        spec = self.spec
        n_new_nodes = spec.nodes - len(self.nodes)
        if n_new_nodes < 0:
            raise SpecInfeasibleError(
                f"{spec.name}: curated structures use {len(self.nodes)} nodes"
                f" > requested {spec.nodes}")
        target_edges = spec.edges - len(self.edges)
        if target_edges < 0:
            raise SpecInfeasibleError(
                f"{spec.name}: curated structures use {len(self.edges)} edges"
                f" > requested {spec.edges}")
        bulk_tiers = ("Internet", "Vendor", "DMZ", "User", "WebServer", "AppServer")
        for _ in range(n_new_nodes):
            tier = bulk_tiers[int(self.rng.integers(len(bulk_tiers)))]
            app = APP_NON if self.rng.integers(3) else APP_BUSINESS
            self.new_node(tier, app, "bulk")
        # bulk edges stay outside the attack surface: sources never carry a
        # qualifying vuln and destinations are never critical
        critical = set(self.critical_ids)
        srcs = sorted(nid for nid in self.by_id if nid not in self.qual_vuln_ids)
        dsts = sorted(nid for nid in self.by_id if nid not in critical)
        allowed = [(s, d) for s in srcs for d in dsts
                   if s != d and (s, d) not in self.pairs]
        if len(allowed) < target_edges:
            raise SpecInfeasibleError(
                f"{spec.name}: need {target_edges} bulk edges, only "
                f"{len(allowed)} free pairs")
        for i in self.rng.choice(len(allowed), size=target_edges, replace=False):
            s, d = allowed[int(i)]
            self.add_edge(s, d, None, "bulk")

    # -- compliance, services, policies ----------------------------------------

    def assign_compliance(self) -> None:
        spec = self.spec
        pinned = sum(1 for e in self.edges if e.f5 == 1)
        free = [i for i, e in enumerate(self.edges) if e.f5 is None]
        quota = spec.compliant_edges - pinned
        if quota < 0:
            raise SpecInfeasibleError(
                f"{spec.name}: {pinned} edges pinned compliant exceeds target "
                f"{spec.compliant_edges}")
        if quota > len(free):
            raise SpecInfeasibleError(
                f"{spec.name}: want {quota} more compliant edges, only "
                f"{len(free)} unpinned")
        chosen: set[int] = set()
        if quota:
            chosen = {int(i) for i in self.rng.choice(len(free), size=quota, replace=False)}
        for j, i in enumerate(free):
            self.edges[i].f5 = 1 if j in chosen else 0

    def assign_services(self) -> tuple[list[tuple], list[GovernanceRule], list[ServiceTagRule]]:
        """Give each edge a protocol/port and build the governance tables."""
        used_keys: set[tuple[str, str, str, int]] = set()
        rules: set[tuple[str, str, str]] = set()
        services: list[tuple] = []
        for rec in self.edges:
            pool = _SERVICES_RULED if rec.f5 == 1 else _NONCOMPLIANT_POOL
            start = int(self.rng.integers(len(pool)))
            svc = None
            for off in range(len(pool)):
                cand = pool[(start + off) % len(pool)]
                if (rec.src, rec.dst, cand[0], cand[1]) not in used_keys:
                    svc = cand
                    break
            if svc is None:
                raise _GenerationError(f"no free service for {rec.src}->{rec.dst}")
            used_keys.add((rec.src, rec.dst, svc[0], svc[1]))
            services.append(svc)
            if rec.f5 == 1:
                rules.add((self.by_id[rec.src].tag, self.by_id[rec.dst].tag, svc[2]))
        tag_rows = [ServiceTagRule(protocol=p, port_lo=port, port_hi=port, tag=t)
                    for p, port, t in _SERVICES_RULED + _SERVICES_UNRULED]
        rule_objs = [GovernanceRule(src_tag=a, dst_tag=b, service_tag=c)
                     for a, b, c in sorted(rules)]
        return services, rule_objs, tag_rows

    def assign_policies(self, services: list[tuple]) -> tuple[dict[str, ZTPolicy], list[str]]:
        # one policy per (source tier, destination tier, protocol) group
        groups: dict[tuple[int, int, str], list[int]] = {}
        for i, (rec, svc) in enumerate(zip(self.edges, services)):
            key = (TIER_LEVEL[self.by_id[rec.src].tag],
                   TIER_LEVEL[self.by_id[rec.dst].tag], svc[0])
            groups.setdefault(key, []).append(i)
        policies: dict[str, ZTPolicy] = {}
        edge_policy = [""] * len(self.edges)
        for n, key in enumerate(sorted(groups)):
            src_tier, dst_tier, proto = key
            members = groups[key]
            ports = [services[i][1] for i in members]
            pid = f"P{n + 1:03d}"
            policies[pid] = ZTPolicy(
                id=pid,
                src_range=f"10.{src_tier}.0.0/16",
                dst_range=f"10.{dst_tier}.0.0/16",
                protocol=proto,
                port_lo=min(ports),
                port_hi=max(ports),
            )
            for i in members:
                edge_policy[i] = pid
        return policies, edge_policy

    def assemble(self) -> ConnectivityGraph:
        services, rules, tag_rows = self.assign_services()
        policies, edge_policy = self.assign_policies(services)
        assets = {
            node.id: Asset(
                id=node.id,
                address=node.address,
                tag=node.tag,
                criticality=node.level,
                app_criticality=node.app,
                vulnerabilities=list(node.vulns),
            )
            for node in self.nodes
        }
        edges = [
            Edge(src=rec.src, dst=rec.dst, protocol=svc[0], port=svc[1], policy_id=pid)
            for rec, svc, pid in zip(self.edges, services, edge_policy)
        ]
        spec = self.spec
        meta = {
            "name": spec.name,
            "seed": spec.seed,
            "config_hash": spec.config_hash(),
            "counts": {
                "assets": len(assets),
                "edges": len(edges),
                "critical_assets": len(self.critical_ids),
            },
        }
        return ConnectivityGraph(assets=assets, edges=edges, policies=policies,
                                 rules=rules, service_tags=tag_rows, meta=meta)


def _verify_and_describe(spec: GenSpec, builder: _Builder,
                         graph: ConnectivityGraph) -> tuple[GroundTruth, CoverageReport]:
    report = governance.mark_compliance(graph)
    if report.compliant_count != spec.compliant_edges:
        raise _GenerationError(
            f"compliant count {report.compliant_count} != target {spec.compliant_edges}")

    critical = governance.critical_assets(graph)
    surface = preprocess.remove_self_loops(preprocess.filter_edges(graph, critical))
    missing = sorted(critical - surface.nodes)
    if missing:
        raise _GenerationError(f"critical assets missing from surface: {missing[:5]}")

    labels = oracle.shortest_paths(surface, critical)
    finite = [d for d in labels.distances.values() if not math.isinf(d)]
    if finite and max(finite) > 5:
        raise _GenerationError(f"label exceeds 5 hops: max={max(finite)}")

    params = oracle.TriageParams()
    classes = triage.oracle_edge_classes(surface, graph.assets, params)
    crit_edge_set = {k for k, c in classes.items() if c != triage.CLASS_SAFE}

    # banded feature cell of every surface edge
    assets = graph.assets
    cell_of_key: dict[tuple, str] = {}
    populated: dict[str, int] = {}
    for edge in surface.edges:
        f1 = triage.band_f1(assets[edge.dst].criticality)
        f2 = triage.APP_CODE[assets[edge.dst].app_criticality]
        f3 = triage.band_f3(preprocess.max_qualifying_score(assets[edge.src]))
        f4 = triage.bucket_f4(labels.label(edge.src))
        f5 = 1 if edge.compliant else 0
        cid = cell_id(f1, f2, f3, f4, f5)
        cell_of_key[edge.key] = cid
        populated[cid] = populated.get(cid, 0) + 1

    # the verdict classifier can only reach its accuracy target if the edge
    # class is a function of the banded features
    class_of_cell: dict[str, str] = {}
    for key, cid in cell_of_key.items():
        cls = classes[key]
        prev = class_of_cell.setdefault(cid, cls)
        if prev != cls:
            raise _GenerationError(f"cell {cid} maps to both {prev} and {cls}")

    # every promised cell must be exactly what its edge produced
    required: list[str] = []
    for edge_idx, promise in builder.promises:
        key = graph.edges[edge_idx].key
        required.append(promise)
        got = cell_of_key.get(key)
        if got != promise:
            rec = builder.edges[edge_idx]
            raise _GenerationError(
                f"edge {rec.src}->{rec.dst} ({rec.role}) promised {promise}, got {got}")
    required = sorted(set(required))

    vulnerable = sorted(a.id for a in assets.values() if a.vulnerabilities)
    touched: set[str] = set()
    for key in crit_edge_set:
        touched.add(key[0])
        touched.add(key[1])
    compromised = sorted(v for v in vulnerable if v in touched)

    if spec.vulnerable_assets is not None:
        if len(vulnerable) != spec.vulnerable_assets:
            raise _GenerationError(
                f"vulnerable count {len(vulnerable)} != target {spec.vulnerable_assets}")
        if compromised != vulnerable:
            off = sorted(set(vulnerable) - set(compromised))
            raise _GenerationError(f"vulnerable assets off critical paths: {off[:5]}")
        n_crit = sum(1 for v in vulnerable if assets[v].criticality == CRITICALITY_MAX)
        if n_crit != spec.vulnerable_criticals:
            raise _GenerationError(
                f"vulnerable criticals {n_crit} != target {spec.vulnerable_criticals}")

    distances: dict[str, int | None] = {}
    for node in sorted(surface.nodes):
        d = labels.distances[node]
        distances[node] = None if math.isinf(d) else int(d)

    truth = GroundTruth(
        surface_nodes=sorted(surface.nodes),
        distances=distances,
        critical_edges=sorted(edge_key_str(k) for k in crit_edge_set),
        edge_classes={edge_key_str(k): classes[k] for k in sorted(classes)},
        vulnerable_assets=vulnerable,
        compromised_assets=compromised,
        required_cells=required,
        populated_cells=dict(sorted(populated.items())),
    )
    coverage = CoverageReport(required=required, populated=truth.populated_cells)
    if coverage.missing:
        raise _GenerationError(f"promised cells missing: {coverage.missing[:5]}")
    return truth, coverage


def generate(spec: GenSpec) -> GenResult:
    """Build a dataset matching the spec exactly.

    Raises SpecInfeasibleError when the requested counts cannot be met.
    """
    spec.validate()
    builder = _Builder(spec)
    builder.make_criticals()

    if spec.coverage == "full":
        builder.cov_chains_full()
        builder.cov_pure_feeders()
        builder.cov_side_taps()
        builder.cov_gadgets()
        builder.cov_laterals()
    elif spec.coverage == "basic":
        builder.cov_basic()
    else:
        builder.cov_mission()

    builder.organic_feeders()

    if spec.coverage == "mission":
        # the vulnerable budget is exact, so pad with clean feeders only
        extra = max(0, min(20, spec.nodes - len(builder.nodes) - 16))
        builder.extra_feeders(extra)
    else:
        # leave head-room for bulk-only nodes outside the attack surface
        bulk_min = max(16, round(0.08 * spec.nodes))
        chain_budget = spec.nodes - len(builder.nodes) - bulk_min
        if chain_budget > 0:
            builder.organic_chains(chain_budget)

    builder.noise_vulns()
    builder.self_loops()
    builder.bulk()
    builder.assign_compliance()

    graph = builder.assemble()
    truth, coverage = _verify_and_describe(spec, builder, graph)
    return GenResult(graph=graph, truth=truth, coverage=coverage)
