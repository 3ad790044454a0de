"""End-to-end command flows on a compact dataset, plus exit-code contract."""

import json
from pathlib import Path

import pytest

from spgnn import cli

FAST = ["--epochs", "6", "--q", "3", "--width", "8"]


@pytest.fixture(scope="module")
def work(tmp_path_factory):
    return tmp_path_factory.mktemp("cli")


@pytest.fixture(scope="module")
def data_dir(work):
    out = work / "data"
    assert cli.main(["generate", "--preset", "small", "--out", str(out)]) == 0
    return out


@pytest.fixture(scope="module")
def data_dir_b(work):
    out = work / "data-b"
    code = cli.main(
        ["generate", "--preset", "small", "--seed", "6", "--name", "small-b",
         "--out", str(out)]
    )
    assert code == 0
    return out


@pytest.fixture(scope="module")
def train_dir(work, data_dir):
    out = work / "train"
    code = cli.main(
        ["train", "--dataset", str(data_dir / "dataset.json"), "--out", str(out),
         "--seed", "0", "--head", "both", "--dump-surface", "--dump-labels", *FAST]
    )
    assert code == 0
    return out


@pytest.fixture(scope="module")
def analyze_dir(work, data_dir):
    out = work / "analyze"
    code = cli.main(
        ["analyze", "--dataset", str(data_dir / "dataset.json"), "--out", str(out),
         "--seed", "0", *FAST]
    )
    assert code == 0
    return out


def test_no_subcommand_is_a_usage_error():
    with pytest.raises(SystemExit) as exc:
        cli.main([])
    assert exc.value.code == 2


def test_generate_outputs(data_dir):
    for name in ("dataset.json", "ground_truth.json", "coverage.csv"):
        assert (data_dir / name).exists()
    doc = json.loads((data_dir / "dataset.json").read_text())
    counts = doc["meta"]["counts"]
    assert counts["assets"] == 150
    assert counts["edges"] == 700
    assert counts["critical_assets"] == 40


def test_generate_name_and_seed_overrides(data_dir_b):
    doc = json.loads((data_dir_b / "dataset.json").read_text())
    assert doc["meta"]["name"] == "small-b"


def test_train_outputs(train_dir):
    expected = [
        "train_report.json", "distance_predictions.csv", "model.json",
        "loss_curve.png", "prediction_scatter.png", "dnn_head.json",
        "head_loss_curve.png", "surface_edges.csv", "labels.csv",
    ]
    for name in expected:
        assert (train_dir / name).exists(), name
    payload = json.loads((train_dir / "train_report.json").read_text())
    assert payload["kind"] == "train-report"
    assert len(payload["loss_trace"]) == 6
    assert payload["dnn"] is not None
    for split in ("train", "test", "all"):
        section = payload["metrics"][split]
        assert 0.0 <= section["exact"] <= 1.0
        assert section["exact"] <= section["within_one"] <= 1.0
    header = (train_dir / "distance_predictions.csv").read_text().splitlines()[0]
    assert header == "node,split,label,z,predicted_sp,predicted_class"


def test_train_reruns_are_byte_identical(work, data_dir):
    outs = []
    for sub in ("rerun-a", "rerun-b"):
        out = work / sub
        code = cli.main(
            ["train", "--dataset", str(data_dir / "dataset.json"),
             "--out", str(out), "--seed", "3", "--head", "round", *FAST]
        )
        assert code == 0
        outs.append(out)
    for name in ("train_report.json", "distance_predictions.csv", "model.json",
                 "loss_curve.png", "prediction_scatter.png"):
        a = (outs[0] / name).read_bytes()
        b = (outs[1] / name).read_bytes()
        assert a == b, f"{name} differs between identical runs"


def test_transfer_round_head(work, train_dir, data_dir_b):
    out = work / "transfer"
    code = cli.main(
        ["transfer", "--model", str(train_dir / "model.json"),
         "--dataset", str(data_dir_b / "dataset.json"), "--out", str(out)]
    )
    assert code == 0
    payload = json.loads((out / "transfer_report.json").read_text())
    assert payload["kind"] == "transfer-report"
    assert 0.0 <= payload["metrics"]["all"]["within_one"] <= 1.0
    assert (out / "distance_predictions.csv").exists()
    assert (out / "prediction_scatter.png").exists()


def test_transfer_refuses_dnn_head(work, train_dir, data_dir_b, capsys):
    out = work / "transfer-dnn"
    code = cli.main(
        ["transfer", "--model", str(train_dir / "model.json"),
         "--dataset", str(data_dir_b / "dataset.json"), "--out", str(out),
         "--head", "dnn"]
    )
    assert code == 1
    assert "head round" in capsys.readouterr().err


def test_analyze_outputs(analyze_dir):
    expected = [
        "analyze_report.json", "verdicts.csv", "paths.csv", "plan.json",
        "roc_curve.png", "classifier_loss.png", "model.json",
    ]
    for name in expected:
        assert (analyze_dir / name).exists(), name
    payload = json.loads((analyze_dir / "analyze_report.json").read_text())
    assert payload["kind"] == "analyze-report"
    assert payload["trained_inline"] is True
    assert 0.0 <= payload["edges"]["recall"] <= 1.0
    assert 0.0 <= payload["classifier"]["accuracy_all"] <= 1.0
    assert payload["classifier"]["auc"] is None or 0.0 <= payload["classifier"]["auc"] <= 1.0
    counts = payload["edges"]["verdicts"]
    assert sum(counts.values()) == payload["dataset"]["edges"]  # every edge judged
    plan = json.loads((analyze_dir / "plan.json").read_text())
    assert plan["kind"] == "mitigation-plan"
    assert len(plan["blocks"]) == payload["mitigation"]["blocks"]


def test_analyze_with_checkpoint(work, data_dir, train_dir):
    out = work / "analyze-ckpt"
    code = cli.main(
        ["analyze", "--dataset", str(data_dir / "dataset.json"), "--out", str(out),
         "--model", str(train_dir / "model.json")]
    )
    assert code == 0
    payload = json.loads((out / "analyze_report.json").read_text())
    assert payload["trained_inline"] is False
    assert not (out / "model.json").exists()  # nothing was trained


def test_analyze_checkpoint_refuses_dnn_head(work, data_dir, train_dir, capsys):
    out = work / "analyze-ckpt-dnn"
    code = cli.main(
        ["analyze", "--dataset", str(data_dir / "dataset.json"), "--out", str(out),
         "--model", str(train_dir / "model.json"), "--head", "dnn"]
    )
    assert code == 1
    assert "head round" in capsys.readouterr().err


def test_mitigate_apply_and_idempotence(work, data_dir, analyze_dir):
    out1 = work / "mitigated"
    code = cli.main(
        ["mitigate", "--dataset", str(data_dir / "dataset.json"),
         "--plan", str(analyze_dir / "plan.json"), "--out", str(out1)]
    )
    assert code == 0
    first = json.loads((out1 / "mitigation_report.json").read_text())
    assert first["edges_after"] == first["edges_before"] - first["edges_removed"]

    out2 = work / "mitigated-again"
    code = cli.main(
        ["mitigate", "--dataset", str(out1 / "dataset.json"),
         "--plan", str(analyze_dir / "plan.json"), "--out", str(out2)]
    )
    assert code == 0
    second = json.loads((out2 / "mitigation_report.json").read_text())
    assert second["edges_removed"] == 0
    assert second["edges_after"] == first["edges_after"]


def test_eval_scores_outputs(work, data_dir, train_dir, analyze_dir):
    out = work / "eval_report.json"
    code = cli.main(
        ["eval", "--truth", str(data_dir / "ground_truth.json"),
         "--predictions", str(train_dir / "distance_predictions.csv"),
         "--verdicts", str(analyze_dir / "verdicts.csv"),
         "--out", str(out)]
    )
    assert code == 0
    payload = json.loads(out.read_text())
    assert payload["kind"] == "eval-report"
    assert 0.0 <= payload["distances"]["exact"] <= 1.0
    assert 0.0 <= payload["verdicts"]["recall"] <= 1.0


def test_eval_rejects_incomplete_predictions(work, data_dir, capsys):
    stub = work / "partial.csv"
    stub.write_text("node,split,label,z,predicted_sp\nA0001,test,1,1.0,1\n")
    code = cli.main(
        ["eval", "--truth", str(data_dir / "ground_truth.json"),
         "--predictions", str(stub)]
    )
    assert code == 1
    assert "missing" in capsys.readouterr().err


def test_missing_dataset_is_input_error(work, capsys):
    code = cli.main(
        ["train", "--dataset", str(work / "nope.json"), "--out", str(work / "x")]
    )
    assert code == 1
    assert "error" in capsys.readouterr().err


def test_invalid_json_is_input_error(work, capsys):
    bad = work / "bad.json"
    bad.write_text("{not json")
    code = cli.main(["train", "--dataset", str(bad), "--out", str(work / "y")])
    assert code == 1


def test_divergence_exit_code(work, data_dir, capsys):
    out = work / "diverge"
    code = cli.main(
        ["train", "--dataset", str(data_dir / "dataset.json"), "--out", str(out),
         "--seed", "0", "--head", "round", "--lr", "1e30", "--epochs", "3"]
    )
    assert code == 2
    assert "diverged" in capsys.readouterr().err.lower()


def test_degenerate_data_exit_code(work, data_dir, capsys):
    doc = json.loads((data_dir / "dataset.json").read_text())
    for asset in doc["assets"]:
        asset["criticality"] = min(asset["criticality"], 6)
    doc["meta"]["counts"]["critical_assets"] = 0
    flat = work / "no_critical.json"
    flat.write_text(json.dumps(doc))
    out = work / "degenerate"
    code = cli.main(
        ["train", "--dataset", str(flat), "--out", str(out), "--head", "round", *FAST]
    )
    assert code == 3
    assert "degenerate" in capsys.readouterr().err


def test_scan_ingestion_flows_through_train(work, data_dir, capsys):
    doc = json.loads((data_dir / "dataset.json").read_text())
    target = next(a["id"] for a in doc["assets"] if not a["vulnerabilities"])
    scan = work / "scan.csv"
    scan.write_text(
        "asset_id,vuln_id,base_score,scope_changed\n"
        f"{target},CVE-2026-0001,9.1,1\n"
    )
    out = work / "train-scan"
    code = cli.main(
        ["train", "--dataset", str(data_dir / "dataset.json"), "--out", str(out),
         "--seed", "0", "--head", "round", "--scan", str(scan), *FAST]
    )
    assert code == 0
    assert "ingested 1 vulnerabilities" in capsys.readouterr().out
