"""Mitigation plans: construction, serialization, safe idempotent apply."""

import json
import logging

import pytest
from hypothesis import given, strategies as st

from spgnn import mitigate
from spgnn.errors import PolicyResolutionError
from spgnn.triage import (
    CLASS_COMPLIANT_CRITICAL,
    CLASS_NONCOMPLIANT_CRITICAL,
    CLASS_SAFE,
    EdgeVerdict,
)

from .conftest import make_asset, make_graph


def verdict_for(key, cls, compliant, policy_id="P001"):
    return EdgeVerdict(
        edge=key,
        verdict=cls,
        score_safe=0.1,
        score_compliant_critical=0.2,
        score_noncompliant_critical=0.7,
        policy_id=policy_id,
        compliant=compliant,
    )


def plan_graph():
    assets = [make_asset(x) for x in "abcd"]
    graph = make_graph(assets, [("a", "b"), ("b", "c"), ("c", "d")])
    flags = {("b", "c", "tcp", 443): True}
    for e in graph.edges:
        e.compliant = flags.get(e.key, False)
    return graph


def test_plan_routes_verdicts():
    graph = plan_graph()
    verdicts = [
        verdict_for(("a", "b", "tcp", 443), CLASS_NONCOMPLIANT_CRITICAL, False),
        verdict_for(("b", "c", "tcp", 443), CLASS_COMPLIANT_CRITICAL, True),
        verdict_for(("c", "d", "tcp", 443), CLASS_SAFE, False),
    ]
    result = mitigate.plan(verdicts, graph)
    assert result.blocked_keys() == {("a", "b", "tcp", 443)}
    (block,) = result.blocks
    assert block.src_addr == graph.assets["a"].address
    assert block.dst_addr == graph.assets["b"].address
    assert block.protocol == "tcp" and block.port == 443
    assert block.policy_id == "P001"
    (advisory,) = result.advisories
    assert advisory.edge == ("b", "c", "tcp", 443)
    assert advisory.policy_id == "P001"


def test_plan_unknown_edge_raises():
    graph = plan_graph()
    ghost = verdict_for(("z", "a", "tcp", 443), CLASS_NONCOMPLIANT_CRITICAL, False)
    with pytest.raises(PolicyResolutionError, match="not in the graph"):
        mitigate.plan([ghost], graph)


def test_plan_unresolvable_policy_raises():
    graph = plan_graph()
    graph.edges[0].policy_id = "P999"
    bad = verdict_for(graph.edges[0].key, CLASS_NONCOMPLIANT_CRITICAL, False)
    with pytest.raises(PolicyResolutionError, match="P999"):
        mitigate.plan([bad], graph)


def test_plan_dict_round_trip():
    graph = plan_graph()
    verdicts = [
        verdict_for(("a", "b", "tcp", 443), CLASS_NONCOMPLIANT_CRITICAL, False),
        verdict_for(("b", "c", "tcp", 443), CLASS_COMPLIANT_CRITICAL, True),
    ]
    original = mitigate.plan(verdicts, graph)
    blob = json.dumps(mitigate.plan_to_dict(original))
    restored = mitigate.plan_from_dict(json.loads(blob))
    assert restored.blocks == original.blocks
    assert restored.advisories == original.advisories
    data = json.loads(blob)
    assert data["kind"] == "mitigation-plan"
    assert all(b["action"] == mitigate.ACTION_DENY for b in data["blocks"])
    assert all(a["action"] == mitigate.ACTION_WARN for a in data["advisories"])


def test_plan_from_dict_rejects_other_kinds():
    with pytest.raises(ValueError, match="mitigation plan"):
        mitigate.plan_from_dict({"kind": "model", "blocks": []})


def test_apply_removes_only_blocked_noncompliant():
    graph = plan_graph()
    verdicts = [
        verdict_for(("a", "b", "tcp", 443), CLASS_NONCOMPLIANT_CRITICAL, False)
    ]
    result = mitigate.plan(verdicts, graph)
    before = [e.key for e in graph.edges]
    after = mitigate.apply(result, graph)
    assert [e.key for e in graph.edges] == before  # input untouched
    assert [e.key for e in after.edges] == [
        ("b", "c", "tcp", 443),
        ("c", "d", "tcp", 443),
    ]


def test_apply_refuses_compliant_edge(caplog):
    graph = plan_graph()
    rogue = mitigate.MitigationPlan(
        blocks=[
            mitigate.DenyOverride(
                edge=("b", "c", "tcp", 443),
                src_addr="x",
                dst_addr="y",
                protocol="tcp",
                port=443,
                policy_id="P001",
                reason="test",
            )
        ]
    )
    with caplog.at_level(logging.WARNING, logger="spgnn.mitigate"):
        after = mitigate.apply(rogue, graph)
    assert ("b", "c", "tcp", 443) in {e.key for e in after.edges}
    assert "refusing to remove compliant edge" in caplog.text


def test_apply_is_idempotent_and_updates_counts():
    graph = plan_graph()
    graph.meta["counts"] = {"assets": 4, "edges": 3, "policies": 1}
    verdicts = [
        verdict_for(("a", "b", "tcp", 443), CLASS_NONCOMPLIANT_CRITICAL, False)
    ]
    result = mitigate.plan(verdicts, graph)
    once = mitigate.apply(result, graph)
    twice = mitigate.apply(result, once)
    assert [e.key for e in once.edges] == [e.key for e in twice.edges]
    assert once.meta["counts"]["edges"] == 2
    assert twice.meta["counts"]["edges"] == 2
    assert graph.meta["counts"]["edges"] == 3  # original metadata untouched


@st.composite
def graph_with_plan(draw):
    n = draw(st.integers(3, 8))
    ids = [f"n{i}" for i in range(n)]
    pairs = draw(
        st.lists(
            st.tuples(st.sampled_from(ids), st.sampled_from(ids)),
            min_size=1,
            max_size=15,
            unique=True,
        )
    )
    graph = make_graph([make_asset(a) for a in ids], pairs)
    for e in graph.edges:
        e.compliant = draw(st.booleans())
    keys = [e.key for e in graph.edges]
    blocked = draw(st.lists(st.sampled_from(keys), unique=True))
    blocks = [
        mitigate.DenyOverride(
            edge=k,
            src_addr="10.0.0.1",
            dst_addr="10.0.0.2",
            protocol=k[2],
            port=k[3],
            policy_id="P001",
            reason="generated",
        )
        for k in blocked
    ]
    return graph, mitigate.MitigationPlan(blocks=blocks)


@given(graph_with_plan())
def test_apply_property(case):
    graph, random_plan = case
    logger = logging.getLogger("spgnn.mitigate")
    previous = logger.level
    logger.setLevel(logging.ERROR)  # the compliant-skip warning is expected here
    try:
        after = mitigate.apply(random_plan, graph)
        again = mitigate.apply(random_plan, after)
    finally:
        logger.setLevel(previous)
    blocked = random_plan.blocked_keys()
    expected = {
        e.key for e in graph.edges if e.compliant or e.key not in blocked
    }
    assert {e.key for e in after.edges} == expected
    # every compliant edge survives, and a second application changes nothing
    compliant = {e.key for e in graph.edges if e.compliant}
    assert compliant <= {e.key for e in after.edges}
    assert [e.key for e in again.edges] == [e.key for e in after.edges]
