"""Command-line interface for dataset generation, training, and triage.

Exit codes: 0 success, 1 dataset/input problems, 2 training divergence,
3 degenerate training data.
"""

from __future__ import annotations

import argparse
import dataclasses
import json
import logging
import sys
import time
from pathlib import Path

import numpy as np

from . import __version__, datagen, governance, mitigate, oracle, preprocess, report, triage
from . import model as spmodel
from .errors import (
    DatasetError,
    DegenerateDataError,
    TrainingDivergedError,
    TransferUnsupportedError,
)
from .netgraph import edge_key_str, ingest_scan, load_dataset, save_dataset

log = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_INPUT = 1
EXIT_DIVERGED = 2
EXIT_DEGENERATE = 3


# ---------------------------------------------------------------------------
# Shared helpers


def _add_config_args(parser: argparse.ArgumentParser) -> None:
    group = parser.add_argument_group("model configuration")
    group.add_argument("--epochs", type=int, default=None, help="training epochs")
    group.add_argument("--rounds", type=int, default=None, help="message-passing rounds")
    group.add_argument("--q", type=int, default=None, help="distance truncation horizon")
    group.add_argument("--width", type=int, default=None, help="hidden width per channel")
    group.add_argument("--lr", type=float, default=None, help="learning rate")
    group.add_argument("--batch-size", type=int, default=None, help="mini-batch size")
    group.add_argument("--anchor-c", type=float, default=None, help="anchor count scale")
    group.add_argument(
        "--train-split", type=float, default=None, help="training fraction of nodes"
    )
    group.add_argument(
        "--threshold-b",
        type=int,
        default=None,
        help="distance-class head: classes 0..b, b meaning 'b or beyond'",
    )
    group.add_argument(
        "--grad-clip", type=float, default=None, help="global gradient-norm bound"
    )


def _config_from_args(args: argparse.Namespace) -> spmodel.SPGNNConfig:
    overrides = {}
    for flag, attr in (
        ("epochs", "epochs"),
        ("rounds", "rounds"),
        ("q", "q"),
        ("width", "width"),
        ("lr", "lr"),
        ("batch_size", "batch_size"),
        ("anchor_c", "anchor_c"),
        ("train_split", "train_split"),
        ("threshold_b", "threshold_b"),
        ("grad_clip", "grad_clip"),
    ):
        value = getattr(args, flag, None)
        if value is not None:
            overrides[attr] = value
    config = spmodel.SPGNNConfig(**overrides)
    config.validate()
    return config


def _out_dir(args: argparse.Namespace) -> Path:
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    return out


def _load_graph(args: argparse.Namespace):
    graph = load_dataset(args.dataset)
    if getattr(args, "scan", None):
        added = ingest_scan(graph, args.scan)
        print(f"ingested {added} vulnerabilities from {args.scan}")
    return graph


@dataclasses.dataclass
class _Prepared:
    graph: object
    critical: set[str]
    surface: preprocess.AttackSurfaceGraph
    labels: oracle.LabelTable
    compliance: governance.ComplianceReport
    loops_removed: int


def _prepare(graph, keep_self_loops: bool = False) -> _Prepared:
    """Compliance marking, surface extraction, shortest-path labels."""
    compliance = governance.mark_compliance(graph)
    critical = governance.critical_assets(graph)
    full = preprocess.filter_edges(graph, critical)
    if keep_self_loops:
        surface = full
        loops_removed = 0
    else:
        surface = preprocess.remove_self_loops(full)
        loops_removed = len(full.edges) - len(surface.edges)
    labels = oracle.shortest_paths(surface, critical)
    return _Prepared(
        graph=graph,
        critical=critical,
        surface=surface,
        labels=labels,
        compliance=compliance,
        loops_removed=loops_removed,
    )


def _dataset_summary(graph, prepared: _Prepared) -> dict:
    meta = dict(graph.meta) if graph.meta else {}
    return {
        "name": meta.get("name", ""),
        "config_hash": meta.get("config_hash", ""),
        "assets": len(graph.assets),
        "edges": len(graph.edges),
        "critical_assets": len(prepared.critical),
        "compliant_edges": prepared.compliance.compliant_count,
        "surface_nodes": len(prepared.surface.nodes),
        "surface_edges": len(prepared.surface.edges),
        "self_loops_removed": prepared.loops_removed,
    }


def _dump_surface(path: Path, prepared: _Prepared) -> None:
    import csv

    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["src", "dst", "protocol", "port", "reason", "compliant"])
        for edge in sorted(prepared.surface.edges, key=lambda e: e.key):
            writer.writerow(
                [
                    edge.src,
                    edge.dst,
                    edge.protocol,
                    edge.port,
                    prepared.surface.provenance.get(edge.key, ""),
                    int(edge.compliant),
                ]
            )


def _dump_labels(path: Path, prepared: _Prepared) -> None:
    import csv
    import math

    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["node", "label", "reachable"])
        for node in sorted(prepared.surface.nodes):
            d = prepared.labels.distances[node]
            writer.writerow([node, prepared.labels.label(node), int(not math.isinf(d))])


def _scatter_sample(
    out: Path,
    title: str,
    nodes: list[str],
    labels: oracle.LabelTable,
    prediction: spmodel.PathPrediction,
    seed: int,
    count: int = 20,
) -> None:
    pool = sorted(nodes)
    if not pool:
        return
    rng = np.random.default_rng(seed)
    take = min(count, len(pool))
    sample = sorted(rng.choice(np.array(pool), size=take, replace=False).tolist())
    report.plot_prediction_scatter(
        out,
        sample,
        [labels.label(v) for v in sample],
        [prediction.z_of(v) for v in sample],
        [prediction.sp_of(v) for v in sample],
        title,
    )


# ---------------------------------------------------------------------------
# Subcommands


def cmd_generate(args: argparse.Namespace) -> int:
    factory = datagen.PRESETS[args.preset]
    spec = factory(seed=args.seed) if args.seed is not None else factory()
    if args.name:
        spec = dataclasses.replace(spec, name=args.name)
    out = _out_dir(args)
    started = time.perf_counter()
    result = datagen.generate(spec)
    elapsed = time.perf_counter() - started

    save_dataset(result.graph, out / "dataset.json")
    result.truth.save(out / "ground_truth.json")
    result.coverage.write_csv(out / "coverage.csv")

    counts = result.graph.meta["counts"]
    print(
        f"generated {spec.name}: {counts['assets']} assets, {counts['edges']} edges, "
        f"{counts['critical_assets']} critical, "
        f"{len(result.truth.vulnerable_assets)} vulnerable"
    )
    print(
        f"surface: {len(result.truth.surface_nodes)} nodes, "
        f"{len(result.truth.critical_edges)} critical edges, "
        f"feature cells {len(result.truth.required_cells)} required / "
        f"{len(result.truth.populated_cells)} populated"
    )
    print(f"wrote dataset.json, ground_truth.json, coverage.csv to {out} "
          f"({elapsed:.1f}s)")
    return EXIT_OK


def cmd_train(args: argparse.Namespace) -> int:
    config = _config_from_args(args)
    out = _out_dir(args)
    graph = _load_graph(args)
    prepared = _prepare(graph, keep_self_loops=args.keep_self_loops)

    if args.dump_surface:
        _dump_surface(out / "surface_edges.csv", prepared)
    if args.dump_labels:
        _dump_labels(out / "labels.csv", prepared)

    anchors = spmodel.build_anchors(
        prepared.surface.nodes, prepared.critical, c=config.anchor_c, seed=args.seed
    )
    started = time.perf_counter()
    model, record = spmodel.train(
        prepared.surface, prepared.labels, anchors, config, seed=args.seed
    )
    train_seconds = time.perf_counter() - started
    prediction = spmodel.recover_distances(model, prepared.surface)
    sp_table = prediction.sp_table()

    metrics = {
        "train": spmodel.distance_metrics(sp_table, prepared.labels, record.train_nodes),
        "test": spmodel.distance_metrics(sp_table, prepared.labels, record.test_nodes),
        "all": spmodel.distance_metrics(sp_table, prepared.labels, list(prediction.nodes)),
    }

    dnn_payload = None
    dnn_by_node = None
    if args.head in ("dnn", "both"):
        features = spmodel.build_dnn_features(prediction)
        labels_arr = np.array(
            [prepared.labels.label(v) for v in prediction.nodes], dtype=int
        )
        targets = spmodel.distance_classes(labels_arr, config.threshold_b)
        train_rows = np.array([prediction.index[v] for v in record.train_nodes])
        test_rows = np.array([prediction.index[v] for v in record.test_nodes])
        head, head_trace = spmodel.train_dnn_head(
            features, labels_arr, train_rows, config, seed=args.seed
        )
        classes = spmodel.predict_dnn(head, features)
        dnn_payload = {
            "classes": config.threshold_b + 1,
            "loss_trace": [round(v, 8) for v in head_trace],
            "train": {
                "n": int(train_rows.size),
                "exact": float(np.mean(classes[train_rows] == targets[train_rows])),
            },
            "test": {
                "n": int(test_rows.size),
                "exact": float(np.mean(classes[test_rows] == targets[test_rows])),
            },
        }
        dnn_by_node = {v: int(classes[i]) for v, i in prediction.index.items()}
        report.write_json(
            out / "dnn_head.json",
            {
                "kind": "dnn-head",
                "threshold_b": head.threshold_b,
                "mlp": head.mlp.to_dict(),
            },
        )
        report.plot_loss_curve(
            out / "head_loss_curve.png",
            head_trace,
            "distance-class head training loss",
        )

    split_by_node = {v: "train" for v in record.train_nodes}
    split_by_node.update({v: "test" for v in record.test_nodes})
    labels_by_node = {v: prepared.labels.label(v) for v in prediction.nodes}
    z_by_node = {v: prediction.z_of(v) for v in prediction.nodes}

    payload = {
        "kind": "train-report",
        "dataset": _dataset_summary(graph, prepared),
        "config": json.loads(json.dumps(dataclasses.asdict(config))),
        "config_digest": report.config_digest(config),
        "seed": args.seed,
        "head": args.head,
        "anchors": {"k": anchors.k, "n_critical": anchors.n_critical},
        "loss_trace": [round(v, 8) for v in record.loss_trace],
        "metrics": metrics,
        "dnn": dnn_payload,
        "self_loops_kept": bool(args.keep_self_loops),
    }
    report.write_json(out / "train_report.json", payload)
    report.write_distance_csv(
        out / "distance_predictions.csv",
        prediction.nodes,
        labels_by_node,
        z_by_node,
        sp_table,
        split_by_node,
        dnn_by_node,
    )
    report.write_json(out / "model.json", spmodel.model_to_dict(model))
    report.plot_loss_curve(
        out / "loss_curve.png", record.loss_trace, "distance network training loss"
    )
    _scatter_sample(
        out / "prediction_scatter.png",
        "recovered vs observed distances (test nodes)",
        list(record.test_nodes),
        prepared.labels,
        prediction,
        seed=args.seed,
    )

    print(
        f"trained on {len(record.train_nodes)} nodes / tested on "
        f"{len(record.test_nodes)} (k={anchors.k} anchor sets) in {train_seconds:.1f}s"
    )
    print(
        f"distance accuracy (test): exact {metrics['test']['exact']:.4f}, "
        f"within one hop {metrics['test']['within_one']:.4f}"
    )
    if dnn_payload is not None:
        print(f"distance-class head (test): exact {dnn_payload['test']['exact']:.4f}")
    print(f"wrote train_report.json, distance_predictions.csv, model.json to {out}")
    return EXIT_OK


def cmd_transfer(args: argparse.Namespace) -> int:
    if args.head == "dnn":
        spmodel.refuse_dnn_transfer()
    model = spmodel.model_from_dict(report.load_json(args.model))
    graph = _load_graph(args)
    prepared = _prepare(graph)

    anchors, prediction = spmodel.transfer_model(
        model, prepared.surface, prepared.critical, seed=args.seed
    )
    sp_table = prediction.sp_table()
    metrics = spmodel.distance_metrics(
        sp_table, prepared.labels, list(prediction.nodes)
    )

    payload = {
        "kind": "transfer-report",
        "dataset": _dataset_summary(graph, prepared),
        "source_config_digest": report.config_digest(model.config),
        "source_seed": model.seed,
        "seed": args.seed,
        "head": args.head,
        "anchors": {"k": anchors.k, "n_critical": anchors.n_critical},
        "metrics": {"all": metrics},
    }
    report.write_json(out_path := _out_dir(args) / "transfer_report.json", payload)
    out = out_path.parent
    labels_by_node = {v: prepared.labels.label(v) for v in prediction.nodes}
    z_by_node = {v: prediction.z_of(v) for v in prediction.nodes}
    report.write_distance_csv(
        out / "distance_predictions.csv",
        prediction.nodes,
        labels_by_node,
        z_by_node,
        sp_table,
        {v: "transfer" for v in prediction.nodes},
    )
    _scatter_sample(
        out / "prediction_scatter.png",
        "transferred model: recovered vs observed distances",
        list(prediction.nodes),
        prepared.labels,
        prediction,
        seed=args.seed,
    )
    print(
        f"transferred to {len(prediction.nodes)} surface nodes "
        f"(k={anchors.k} anchor sets)"
    )
    print(
        f"distance accuracy: exact {metrics['exact']:.4f}, "
        f"within one hop {metrics['within_one']:.4f}"
    )
    print(f"wrote transfer_report.json, distance_predictions.csv to {out}")
    return EXIT_OK


def cmd_analyze(args: argparse.Namespace) -> int:
    config = _config_from_args(args)
    out = _out_dir(args)
    graph = _load_graph(args)
    prepared = _prepare(graph)
    params = oracle.TriageParams()

    trained_inline = False
    if args.model:
        model = spmodel.model_from_dict(report.load_json(args.model))
        anchors = spmodel.build_anchors(
            prepared.surface.nodes, prepared.critical, c=model.config.anchor_c,
            seed=args.seed,
        )
        prediction = spmodel.recover_distances(model, prepared.surface, anchors)
    else:
        anchors = spmodel.build_anchors(
            prepared.surface.nodes, prepared.critical, c=config.anchor_c, seed=args.seed
        )
        model, record = spmodel.train(
            prepared.surface, prepared.labels, anchors, config, seed=args.seed
        )
        prediction = spmodel.recover_distances(model, prepared.surface)
        trained_inline = True

    # distance feature per edge: the source node's predicted hop count
    if args.head == "dnn":
        features_dnn = spmodel.build_dnn_features(prediction)
        labels_arr = np.array(
            [prepared.labels.label(v) for v in prediction.nodes], dtype=int
        )
        if not trained_inline:
            # a saved checkpoint was trained on a different graph; the
            # distance-class head does not apply across graphs
            spmodel.refuse_dnn_transfer()
        train_rows = np.array([prediction.index[v] for v in record.train_nodes])
        head, _ = spmodel.train_dnn_head(
            features_dnn, labels_arr, train_rows, config, seed=args.seed
        )
        classes = spmodel.predict_dnn(head, features_dnn)
        edge_sp = {
            e.key: int(classes[prediction.index[e.src]])
            for e in prepared.surface.edges
        }
    else:
        edge_sp = spmodel.assign_edge_features(prediction, prepared.surface)

    features, keys = triage.build_edge_features(prepared.surface, graph.assets, edge_sp)
    truth_classes = triage.oracle_edge_classes(prepared.surface, graph.assets, params)
    y = [truth_classes[k] for k in keys]

    rng = np.random.default_rng(args.seed)
    order = rng.permutation(len(keys))
    n_train = max(1, int(round(0.8 * len(keys))))
    train_idx = np.sort(order[:n_train])
    test_idx = np.sort(order[n_train:])

    classifier, clf_trace = triage.train_edge_classifier(
        features[train_idx], [y[i] for i in train_idx], seed=args.seed
    )
    verdicts = triage.classify_edges(classifier, graph, prepared.surface, features, keys)
    verdict_by_key = {v.edge: v.verdict for v in verdicts}

    surface_keys = list(keys)
    agree = np.array(
        [verdict_by_key[k] == truth_classes[k] for k in surface_keys], dtype=bool
    )
    test_mask = np.zeros(len(surface_keys), dtype=bool)
    test_mask[test_idx] = True

    truth_critical = np.array(
        [truth_classes[k] != triage.CLASS_SAFE for k in surface_keys], dtype=bool
    )
    pred_critical = np.array(
        [verdict_by_key[k] != triage.CLASS_SAFE for k in surface_keys], dtype=bool
    )
    n_true = int(truth_critical.sum())
    n_hit = int((truth_critical & pred_critical).sum())
    n_pred = int(pred_critical.sum())

    surface_verdicts = [v for v in verdicts if v.edge in set(surface_keys)]
    scores = triage.criticality_scores(surface_verdicts)
    surface_truth = np.array(
        [truth_classes[v.edge] != triage.CLASS_SAFE for v in surface_verdicts],
        dtype=bool,
    )
    try:
        auc = triage.roc_auc(surface_truth, scores)
        report.plot_roc_curve(out / "roc_curve.png", surface_truth, scores, auc)
    except DegenerateDataError as exc:
        log.warning("skipping ROC: %s", exc)
        auc = None

    # asset-level view: vulnerable assets sitting on detected critical edges
    vulnerable = {a.id for a in graph.assets.values() if a.vulnerabilities}
    truth_touched = set()
    pred_touched = set()
    for k in surface_keys:
        if truth_classes[k] != triage.CLASS_SAFE:
            truth_touched.update((k[0], k[1]))
        if verdict_by_key[k] != triage.CLASS_SAFE:
            pred_touched.update((k[0], k[1]))
    truth_compromised = sorted(vulnerable & truth_touched)
    detected_compromised = sorted(vulnerable & pred_touched)
    found = len(set(truth_compromised) & set(detected_compromised))

    paths = triage.filter_critical_paths(
        prepared.surface, graph.assets, params, prediction=prediction
    )
    plan = mitigate.plan(verdicts, graph)

    verdict_counts = {c: 0 for c in triage.CLASSES}
    for v in verdicts:
        verdict_counts[v.verdict] += 1

    payload = {
        "kind": "analyze-report",
        "dataset": _dataset_summary(graph, prepared),
        "config_digest": report.config_digest(config if trained_inline else model.config),
        "seed": args.seed,
        "head": args.head,
        "trained_inline": trained_inline,
        "anchors": {"k": anchors.k, "n_critical": anchors.n_critical},
        "classifier": {
            "train_edges": int(train_idx.size),
            "test_edges": int(test_idx.size),
            "loss_trace": [round(v, 8) for v in clf_trace],
            "accuracy_test": float(agree[test_mask].mean()) if test_idx.size else 1.0,
            "accuracy_all": float(agree.mean()),
            "auc": auc,
        },
        "edges": {
            "surface": len(surface_keys),
            "true_critical": n_true,
            "predicted_critical": n_pred,
            "detected_critical": n_hit,
            "recall": (n_hit / n_true) if n_true else 1.0,
            "precision": (n_hit / n_pred) if n_pred else 1.0,
            "verdicts": verdict_counts,
        },
        "assets": {
            "vulnerable": len(vulnerable),
            "truth_compromised": len(truth_compromised),
            "detected_compromised": len(detected_compromised),
            "found": found,
            "recall": (found / len(truth_compromised)) if truth_compromised else 1.0,
        },
        "paths": {"count": len(paths)},
        "mitigation": {
            "blocks": len(plan.blocks),
            "advisories": len(plan.advisories),
        },
    }
    report.write_json(out / "analyze_report.json", payload)
    report.write_verdict_csv(out / "verdicts.csv", verdicts)
    report.write_path_csv(out / "paths.csv", paths)
    report.write_json(out / "plan.json", mitigate.plan_to_dict(plan))
    report.plot_loss_curve(
        out / "classifier_loss.png", clf_trace, "edge classifier training loss"
    )
    if trained_inline:
        report.write_json(out / "model.json", spmodel.model_to_dict(model))

    print(
        f"classified {len(surface_keys)} surface edges: "
        f"{n_pred} critical predicted / {n_true} true "
        f"(recall {payload['edges']['recall']:.4f}, "
        f"accuracy {payload['classifier']['accuracy_all']:.4f}"
        + (f", AUC {auc:.4f})" if auc is not None else ")")
    )
    print(
        f"assets: {payload['assets']['found']}/{len(truth_compromised)} "
        f"compromised assets detected"
    )
    print(
        f"mitigation plan: {len(plan.blocks)} deny overrides, "
        f"{len(plan.advisories)} advisories"
    )
    print(f"wrote analyze_report.json, verdicts.csv, paths.csv, plan.json to {out}")
    return EXIT_OK


def cmd_mitigate(args: argparse.Namespace) -> int:
    graph = load_dataset(args.dataset)
    plan = mitigate.plan_from_dict(report.load_json(args.plan))
    # compliance flags are derived state; restore them so compliant edges
    # are protected from removal
    governance.mark_compliance(graph)
    before = len(graph.edges)
    mitigated = mitigate.apply(plan, graph)
    removed = before - len(mitigated.edges)

    out = _out_dir(args)
    save_dataset(mitigated, out / "dataset.json")
    payload = {
        "kind": "mitigation-report",
        "blocks": len(plan.blocks),
        "advisories": len(plan.advisories),
        "edges_before": before,
        "edges_after": len(mitigated.edges),
        "edges_removed": removed,
        "blocks_skipped": len(plan.blocks) - removed,
    }
    report.write_json(out / "mitigation_report.json", payload)
    print(
        f"applied {len(plan.blocks)} deny overrides: removed {removed} edges "
        f"({payload['blocks_skipped']} skipped), kept {len(mitigated.edges)}"
    )
    print(f"wrote mitigated dataset.json, mitigation_report.json to {out}")
    return EXIT_OK


def cmd_eval(args: argparse.Namespace) -> int:
    import csv

    truth = datagen.GroundTruth.load(args.truth)
    payload: dict = {"kind": "eval-report"}

    if args.predictions:
        sp_by_node: dict[str, int] = {}
        with open(args.predictions, newline="") as fh:
            for row in csv.DictReader(fh):
                sp_by_node[row["node"]] = int(row["predicted_sp"])
        missing = [n for n in truth.surface_nodes if n not in sp_by_node]
        if missing:
            raise DatasetError(
                f"predictions missing {len(missing)} surface nodes "
                f"(first: {missing[:3]})"
            )
        diffs = []
        for node in truth.surface_nodes:
            d = truth.distances[node]
            label = 0 if d is None else d
            diffs.append(abs(sp_by_node[node] - label))
        arr = np.array(diffs, dtype=float)
        payload["distances"] = {
            "n": int(arr.size),
            "exact": float(np.mean(arr == 0)),
            "within_one": float(np.mean(arr <= 1.0)),
        }
        print(
            f"distances: exact {payload['distances']['exact']:.4f}, "
            f"within one hop {payload['distances']['within_one']:.4f} "
            f"over {arr.size} nodes"
        )

    if args.verdicts:
        verdict_by_key: dict[str, str] = {}
        with open(args.verdicts, newline="") as fh:
            for row in csv.DictReader(fh):
                verdict_by_key[row["edge"]] = row["verdict"]
        true_critical = {
            k for k, c in truth.edge_classes.items() if c != triage.CLASS_SAFE
        }
        missing = [k for k in truth.edge_classes if k not in verdict_by_key]
        if missing:
            raise DatasetError(
                f"verdicts missing {len(missing)} surface edges "
                f"(first: {missing[:3]})"
            )
        hits = {
            k
            for k in true_critical
            if verdict_by_key[k] != triage.CLASS_SAFE
        }
        exact = [
            verdict_by_key[k] == c for k, c in truth.edge_classes.items()
        ]
        payload["verdicts"] = {
            "n": len(truth.edge_classes),
            "accuracy": float(np.mean(exact)),
            "true_critical": len(true_critical),
            "detected": len(hits),
            "recall": (len(hits) / len(true_critical)) if true_critical else 1.0,
        }
        print(
            f"verdicts: accuracy {payload['verdicts']['accuracy']:.4f}, "
            f"recall {payload['verdicts']['recall']:.4f} "
            f"({len(hits)}/{len(true_critical)} critical edges)"
        )

    if args.out:
        out = Path(args.out)
        out.parent.mkdir(parents=True, exist_ok=True)
        report.write_json(out, payload)
        print(f"wrote {out}")
    return EXIT_OK


# ---------------------------------------------------------------------------
# Parser


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="spgnn",
        description=(
            "Learn attack-path distances on a network graph, triage "
            "attack-surface edges, and plan mitigations."
        ),
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    parser.add_argument(
        "-v", "--verbose", action="store_true", help="log at INFO level"
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("generate", help="generate a synthetic dataset with ground truth")
    p.add_argument("--preset", choices=sorted(datagen.PRESETS), required=True)
    p.add_argument("--seed", type=int, default=None, help="override the preset seed")
    p.add_argument("--name", default=None, help="override the dataset name")
    p.add_argument("--out", required=True, help="output directory")
    p.set_defaults(func=cmd_generate)

    p = sub.add_parser("train", help="train the distance network on a dataset")
    p.add_argument("--dataset", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--scan", default=None, help="vulnerability scan CSV to ingest")
    p.add_argument(
        "--head",
        choices=("round", "dnn", "both"),
        default="both",
        help="distance read-out: rounding, stacked classifier, or both",
    )
    p.add_argument(
        "--keep-self-loops",
        action="store_true",
        help="keep self-loop edges in the attack surface",
    )
    p.add_argument("--dump-surface", action="store_true")
    p.add_argument("--dump-labels", action="store_true")
    _add_config_args(p)
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("transfer", help="apply a trained model to another dataset")
    p.add_argument("--model", required=True, help="model.json checkpoint")
    p.add_argument("--dataset", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument(
        "--head",
        choices=("round", "dnn"),
        default="round",
        help="only the rounding head transfers across graphs",
    )
    p.set_defaults(func=cmd_transfer)

    p = sub.add_parser(
        "analyze", help="triage attack-surface edges and plan mitigations"
    )
    p.add_argument("--dataset", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--scan", default=None, help="vulnerability scan CSV to ingest")
    p.add_argument(
        "--model", default=None, help="model.json checkpoint (default: train inline)"
    )
    p.add_argument(
        "--head",
        choices=("round", "dnn"),
        default="round",
        help="distance read-out feeding the edge features",
    )
    _add_config_args(p)
    p.set_defaults(func=cmd_analyze)

    p = sub.add_parser("mitigate", help="apply a mitigation plan to a dataset")
    p.add_argument("--dataset", required=True)
    p.add_argument("--plan", required=True, help="plan.json from analyze")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_mitigate)

    p = sub.add_parser("eval", help="score predictions against saved ground truth")
    p.add_argument("--truth", required=True, help="ground_truth.json from generate")
    p.add_argument("--predictions", default=None, help="distance_predictions.csv")
    p.add_argument("--verdicts", default=None, help="verdicts.csv from analyze")
    p.add_argument("--out", default=None, help="eval report JSON path")
    p.set_defaults(func=cmd_eval)

    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(
        level=logging.INFO if args.verbose else logging.WARNING,
        format="%(levelname)s %(name)s: %(message)s",
    )
    try:
        return args.func(args)
    except TrainingDivergedError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_DIVERGED
    except DegenerateDataError as exc:
        print(f"error: degenerate training data: {exc}", file=sys.stderr)
        return EXIT_DEGENERATE
    except TransferUnsupportedError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except DatasetError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except FileNotFoundError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except json.JSONDecodeError as exc:
        print(f"error: invalid JSON input: {exc}", file=sys.stderr)
        return EXIT_INPUT


if __name__ == "__main__":
    sys.exit(main())
