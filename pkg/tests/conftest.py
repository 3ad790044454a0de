"""Shared fixtures: hand-built graphs and one cached generated dataset."""

import os

# the timed acceptance run is specified single-threaded, and oversubscribed
# BLAS threads only slow the small matmuls down anyway
os.environ.setdefault("OMP_NUM_THREADS", "1")
os.environ.setdefault("OPENBLAS_NUM_THREADS", "1")
os.environ.setdefault("MKL_NUM_THREADS", "1")

import pytest

from spgnn import datagen, governance, oracle, preprocess
from spgnn.netgraph import (
    Asset,
    ConnectivityGraph,
    Edge,
    GovernanceRule,
    ServiceTagRule,
    Vulnerability,
    ZTPolicy,
)

QUALIFYING = Vulnerability(id="V-q", base_score=9.8, scope_changed=True)


def make_asset(
    aid,
    criticality=4,
    tag="User",
    app="business-critical",
    vulnerable=False,
    address=None,
):
    vulns = [Vulnerability(id=f"V-{aid}", base_score=9.8, scope_changed=True)] if vulnerable else []
    return Asset(
        id=aid,
        address=address or f"10.0.0.{abs(hash(aid)) % 200 + 1}",
        tag=tag,
        criticality=criticality,
        app_criticality=app,
        vulnerabilities=vulns,
    )


def make_graph(assets, edge_specs, rules=(), service_tags=None):
    """Compact constructor: edge_specs are (src, dst[, protocol, port])."""
    if service_tags is None:
        service_tags = [
            ServiceTagRule(protocol="tcp", port_lo=443, port_hi=443, tag="Web"),
            ServiceTagRule(protocol="tcp", port_lo=22, port_hi=22, tag="SSH"),
        ]
    edges = []
    for spec in edge_specs:
        src, dst = spec[0], spec[1]
        protocol = spec[2] if len(spec) > 2 else "tcp"
        port = spec[3] if len(spec) > 3 else 443
        edges.append(Edge(src=src, dst=dst, protocol=protocol, port=port, policy_id="P001"))
    policy = ZTPolicy(
        id="P001", src_range="10.0.0.0/8", dst_range="10.0.0.0/8",
        protocol="tcp", port_lo=1, port_hi=65535,
    )
    return ConnectivityGraph(
        assets={a.id: a for a in assets},
        edges=edges,
        policies={"P001": policy},
        rules=list(rules),
        service_tags=service_tags,
    )


@pytest.fixture
def chain_graph():
    """a -> b -> c(critical); a and b vulnerable, everything tagged User."""
    assets = [
        make_asset("a", vulnerable=True),
        make_asset("b", vulnerable=True),
        make_asset("c", criticality=7, tag="Database", app="mission-critical"),
    ]
    rules = [GovernanceRule(src_tag="User", dst_tag="User", service_tag="Web")]
    return make_graph(assets, [("a", "b"), ("b", "c")], rules=rules)


@pytest.fixture(scope="session")
def small_result():
    """One generated dataset shared by the whole suite (generation is slow-ish)."""
    return datagen.generate(datagen.small_spec())


@pytest.fixture(scope="session")
def small_prepared(small_result):
    """Compliance-marked small graph with surface and oracle labels."""
    graph = small_result.graph
    governance.mark_compliance(graph)
    critical = governance.critical_assets(graph)
    surface = preprocess.remove_self_loops(preprocess.filter_edges(graph, critical))
    labels = oracle.shortest_paths(surface, critical)
    return graph, critical, surface, labels
