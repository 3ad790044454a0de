"""Dataset file loading, validation, round-tripping, and scan ingestion."""

import json

import pytest
from hypothesis import given
from hypothesis import strategies as st

from spgnn.errors import (
    DanglingReferenceError,
    DatasetFormatError,
    DuplicateIdError,
)
from spgnn.netgraph import (
    edge_key_str,
    graph_to_dict,
    ingest_scan,
    load_dataset,
    parse_edge_key,
    save_dataset,
)

from .conftest import make_asset, make_graph


def write_doc(tmp_path, doc, name="data.json"):
    path = tmp_path / name
    path.write_text(json.dumps(doc))
    return path


def base_doc():
    return {
        "assets": [
            {
                "id": "a",
                "address": "10.0.0.1",
                "tag": "User",
                "criticality": 4,
                "app_criticality": "business-critical",
                "vulnerabilities": [],
            },
            {
                "id": "b",
                "address": "10.0.0.2",
                "tag": "Database",
                "criticality": 7,
                "app_criticality": "mission-critical",
                "vulnerabilities": [
                    {"id": "V-1", "base_score": 9.8, "scope_changed": True}
                ],
            },
        ],
        "edges": [
            {"src": "a", "dst": "b", "protocol": "tcp", "port": 443, "policy_id": "P1"}
        ],
        "zt_policies": [
            {
                "id": "P1",
                "src_range": "10.0.0.0/8",
                "dst_range": "10.0.0.0/8",
                "protocol": "tcp",
                "port_lo": 1,
                "port_hi": 65535,
            }
        ],
        "governance_rules": [
            {"src_tag": "User", "dst_tag": "Database", "service_tag": "Web"}
        ],
        "service_tags": [
            {"protocol": "tcp", "port_lo": 443, "port_hi": 443, "tag": "Web"}
        ],
    }


def test_load_valid_dataset(tmp_path):
    graph = load_dataset(write_doc(tmp_path, base_doc()))
    assert set(graph.assets) == {"a", "b"}
    assert graph.assets["b"].vulnerabilities[0].base_score == 9.8
    assert len(graph.edges) == 1
    assert graph.edges[0].key == ("a", "b", "tcp", 443)
    assert not graph.edges[0].compliant  # derived state starts unset
    assert graph.critical_count() == 1


def test_save_load_round_trip(tmp_path, small_result):
    path = tmp_path / "dataset.json"
    save_dataset(small_result.graph, path)
    loaded = load_dataset(path)
    assert graph_to_dict(loaded) == graph_to_dict(small_result.graph)


def test_save_is_deterministic(tmp_path, small_result):
    save_dataset(small_result.graph, tmp_path / "one.json")
    save_dataset(small_result.graph, tmp_path / "two.json")
    assert (tmp_path / "one.json").read_bytes() == (tmp_path / "two.json").read_bytes()


def test_missing_section(tmp_path):
    doc = base_doc()
    del doc["zt_policies"]
    with pytest.raises(DatasetFormatError, match="zt_policies"):
        load_dataset(write_doc(tmp_path, doc))


def test_invalid_json(tmp_path):
    path = tmp_path / "bad.json"
    path.write_text("{never closed")
    with pytest.raises(DatasetFormatError, match="line 1"):
        load_dataset(path)


def test_missing_file(tmp_path):
    with pytest.raises(DatasetFormatError, match="cannot read"):
        load_dataset(tmp_path / "absent.json")


def test_duplicate_asset_id(tmp_path):
    doc = base_doc()
    doc["assets"].append(dict(doc["assets"][0]))
    with pytest.raises(DuplicateIdError, match="'a'"):
        load_dataset(write_doc(tmp_path, doc))


def test_duplicate_edge_key(tmp_path):
    doc = base_doc()
    doc["edges"].append(dict(doc["edges"][0]))
    with pytest.raises(DuplicateIdError, match="a"):
        load_dataset(write_doc(tmp_path, doc))


def test_dangling_edge_asset(tmp_path):
    doc = base_doc()
    doc["edges"][0]["dst"] = "ghost"
    with pytest.raises(DanglingReferenceError, match="ghost"):
        load_dataset(write_doc(tmp_path, doc))


def test_dangling_policy(tmp_path):
    doc = base_doc()
    doc["edges"][0]["policy_id"] = "P9"
    with pytest.raises(DanglingReferenceError, match="P9"):
        load_dataset(write_doc(tmp_path, doc))


def test_criticality_out_of_range(tmp_path):
    doc = base_doc()
    doc["assets"][0]["criticality"] = 8
    with pytest.raises(DatasetFormatError, match="criticality 8"):
        load_dataset(write_doc(tmp_path, doc))


def test_bad_app_class(tmp_path):
    doc = base_doc()
    doc["assets"][0]["app_criticality"] = "super-critical"
    with pytest.raises(DatasetFormatError, match="app_criticality"):
        load_dataset(write_doc(tmp_path, doc))


def test_base_score_out_of_range(tmp_path):
    doc = base_doc()
    doc["assets"][1]["vulnerabilities"][0]["base_score"] = 10.1
    with pytest.raises(DatasetFormatError, match="base_score"):
        load_dataset(write_doc(tmp_path, doc))


def test_meta_count_mismatch(tmp_path):
    doc = base_doc()
    doc["meta"] = {"counts": {"assets": 5, "edges": 1, "critical_assets": 1}}
    with pytest.raises(DatasetFormatError, match="meta counts"):
        load_dataset(write_doc(tmp_path, doc))


def test_reserved_service_tag_rejected_in_rules(tmp_path):
    doc = base_doc()
    doc["governance_rules"].append(
        {"src_tag": "User", "dst_tag": "User", "service_tag": "__unmatched__"}
    )
    with pytest.raises(DatasetFormatError, match="reserved"):
        load_dataset(write_doc(tmp_path, doc))


def test_meta_counts_accepted_when_right(tmp_path):
    doc = base_doc()
    doc["meta"] = {"counts": {"assets": 2, "edges": 1, "critical_assets": 1}}
    graph = load_dataset(write_doc(tmp_path, doc))
    assert graph.meta["counts"]["assets"] == 2


def test_edge_key_render_and_parse():
    key = ("a", "b", "tcp", 443)
    assert edge_key_str(key) == "a|b|tcp|443"
    assert parse_edge_key("a|b|tcp|443") == key


def test_parse_edge_key_errors():
    with pytest.raises(DatasetFormatError, match="expected src"):
        parse_edge_key("a|b|tcp")
    with pytest.raises(DatasetFormatError, match="integer"):
        parse_edge_key("a|b|tcp|https")


name_chars = st.text(
    st.characters(codec="ascii", exclude_characters="|", min_codepoint=33),
    min_size=1,
    max_size=8,
)


@given(name_chars, name_chars, st.sampled_from(["tcp", "udp"]), st.integers(1, 65535))
def test_edge_key_round_trip_property(src, dst, protocol, port):
    key = (src, dst, protocol, port)
    assert parse_edge_key(edge_key_str(key)) == key


# -- scan ingestion ----------------------------------------------------------


def scan_file(tmp_path, rows, header="asset_id,vuln_id,base_score,scope_changed"):
    path = tmp_path / "scan.csv"
    path.write_text("\n".join([header, *rows]) + "\n")
    return path


def test_ingest_scan_adds_and_is_idempotent(tmp_path):
    graph = make_graph([make_asset("a"), make_asset("b")], [("a", "b")])
    path = scan_file(tmp_path, ["a,CVE-1,9.8,true", "b,CVE-2,5.0,false"])
    assert ingest_scan(graph, path) == 2
    assert ingest_scan(graph, path) == 0  # same ids skipped on re-ingest
    assert [v.id for v in graph.assets["a"].vulnerabilities] == ["CVE-1"]
    assert graph.assets["b"].vulnerabilities[0].scope_changed is False


def test_ingest_scan_rejects_bad_header(tmp_path):
    graph = make_graph([make_asset("a")], [])
    path = scan_file(tmp_path, [], header="asset,vuln,score,scope")
    with pytest.raises(DatasetFormatError, match="header"):
        ingest_scan(graph, path)


def test_ingest_scan_unknown_asset(tmp_path):
    graph = make_graph([make_asset("a")], [])
    path = scan_file(tmp_path, ["ghost,CVE-1,9.8,true"])
    with pytest.raises(DanglingReferenceError, match="ghost"):
        ingest_scan(graph, path)


def test_ingest_scan_bad_score_and_flag(tmp_path):
    graph = make_graph([make_asset("a")], [])
    with pytest.raises(DatasetFormatError, match="not a number"):
        ingest_scan(graph, scan_file(tmp_path, ["a,CVE-1,high,true"]))
    with pytest.raises(DatasetFormatError, match="outside"):
        ingest_scan(graph, scan_file(tmp_path, ["a,CVE-1,11.0,true"]))
    with pytest.raises(DatasetFormatError, match="true/false"):
        ingest_scan(graph, scan_file(tmp_path, ["a,CVE-1,9.8,maybe"]))
