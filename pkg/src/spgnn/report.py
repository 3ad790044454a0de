"""Run artifacts: delimited outputs, JSON reports, and rendered figures.

Reports embed the configuration digest and seed but never wall-clock data,
so re-running a command with the same inputs reproduces every JSON and CSV
byte for byte. Figures are rendered to PNG files next to the delimited
outputs.
"""

from __future__ import annotations

import csv
import dataclasses
import hashlib
import json
from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402  (backend must be set first)
import numpy as np  # noqa: E402

from .model import SPGNNConfig  # noqa: E402
from .netgraph import edge_key_str  # noqa: E402
from .triage import EdgeVerdict  # noqa: E402


def config_digest(config: SPGNNConfig) -> str:
    """Stable 16-hex-digit digest of a training configuration."""
    payload = dataclasses.asdict(config)
    payload["dnn_hidden"] = list(config.dnn_hidden)
    blob = json.dumps(payload, sort_keys=True).encode()
    return hashlib.sha256(blob).hexdigest()[:16]


def write_json(path: str | Path, payload: dict) -> None:
    Path(path).write_text(json.dumps(payload, indent=1, sort_keys=True) + "\n")


def load_json(path: str | Path) -> dict:
    return json.loads(Path(path).read_text())


def write_distance_csv(
    path: str | Path,
    nodes: tuple[str, ...] | list[str],
    labels_by_node: dict[str, int],
    z_by_node: dict[str, float],
    sp_by_node: dict[str, int],
    split_by_node: dict[str, str],
    dnn_by_node: dict[str, int] | None = None,
) -> None:
    """Per-node prediction table; one row per surface node, sorted by id."""
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        header = ["node", "split", "label", "z", "predicted_sp"]
        if dnn_by_node is not None:
            header.append("predicted_class")
        writer.writerow(header)
        for node in sorted(nodes):
            row = [
                node,
                split_by_node.get(node, ""),
                labels_by_node[node],
                f"{z_by_node[node]:.6f}",
                sp_by_node[node],
            ]
            if dnn_by_node is not None:
                row.append(dnn_by_node.get(node, ""))
            writer.writerow(row)


def write_verdict_csv(path: str | Path, verdicts: list[EdgeVerdict]) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(
            [
                "edge",
                "verdict",
                "compliant",
                "policy_id",
                "score_safe",
                "score_compliant_critical",
                "score_noncompliant_critical",
            ]
        )
        for v in sorted(verdicts, key=lambda v: v.edge):
            writer.writerow(
                [
                    edge_key_str(v.edge),
                    v.verdict,
                    int(v.compliant),
                    v.policy_id,
                    f"{v.score_safe:.6f}",
                    f"{v.score_compliant_critical:.6f}",
                    f"{v.score_noncompliant_critical:.6f}",
                ]
            )


def write_path_csv(path: str | Path, descriptors) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["start", "target", "length", "predicted_start_sp"])
        for d in sorted(descriptors, key=lambda d: (d.start, d.target)):
            sp = "" if d.predicted_start_sp is None else d.predicted_start_sp
            writer.writerow([d.start, d.target, d.length, sp])


# ---------------------------------------------------------------------------
# Figures


def plot_loss_curve(path: str | Path, trace: list[float], title: str) -> None:
    fig, ax = plt.subplots(figsize=(6.0, 4.0))
    epochs = np.arange(1, len(trace) + 1)
    ax.plot(epochs, trace, marker="o", markersize=3, linewidth=1.2)
    ax.set_xlabel("epoch")
    ax.set_ylabel("training loss")
    ax.set_title(title)
    ax.grid(True, alpha=0.3)
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)


def plot_prediction_scatter(
    path: str | Path,
    sample_nodes: list[str],
    observed: list[int],
    z_values: list[float],
    rounded: list[int],
    title: str,
) -> None:
    """Observed vs raw vs rounded distances for a small node sample."""
    fig, ax = plt.subplots(figsize=(9.0, 4.0))
    xs = np.arange(len(sample_nodes))
    ax.plot(xs, observed, "o", mfc="none", markersize=9, label="observed")
    ax.plot(xs, z_values, "x", markersize=7, label="recovered (raw)")
    ax.plot(xs, rounded, ".", markersize=7, label="recovered (rounded)")
    ax.set_xticks(xs)
    ax.set_xticklabels(sample_nodes, rotation=90, fontsize=6)
    ax.set_ylabel("hops to nearest critical asset")
    ax.set_title(title)
    ax.legend(loc="upper right", fontsize=8)
    ax.grid(True, axis="y", alpha=0.3)
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)


def roc_points(truth: np.ndarray, scores: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """(false positive rate, true positive rate) swept over thresholds."""
    truth = np.asarray(truth, dtype=bool)
    scores = np.asarray(scores, dtype=float)
    order = np.argsort(-scores, kind="mergesort")
    sorted_truth = truth[order]
    tp = np.cumsum(sorted_truth)
    fp = np.cumsum(~sorted_truth)
    n_pos = max(int(truth.sum()), 1)
    n_neg = max(int((~truth).sum()), 1)
    tpr = np.r_[0.0, tp / n_pos]
    fpr = np.r_[0.0, fp / n_neg]
    return fpr, tpr


def plot_roc_curve(
    path: str | Path, truth: np.ndarray, scores: np.ndarray, auc_value: float
) -> None:
    fpr, tpr = roc_points(truth, scores)
    fig, ax = plt.subplots(figsize=(5.0, 5.0))
    ax.plot(fpr, tpr, linewidth=1.5, label=f"AUC = {auc_value:.4f}")
    ax.plot([0, 1], [0, 1], linestyle="--", linewidth=0.8, color="gray")
    ax.set_xlabel("false positive rate")
    ax.set_ylabel("true positive rate")
    ax.set_title("edge criticality ROC")
    ax.legend(loc="lower right")
    ax.grid(True, alpha=0.3)
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)
