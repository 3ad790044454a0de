"""Attack-path triage: edge features, verdict classifier, path filtering.

Each attack-surface edge gets five features:

* f1: destination trust level 0-7
* f2: destination application criticality (0 non, 1 business, 2 mission)
* f3: highest qualifying vulnerability score on the source, 0.0 if none
* f4: predicted hop distance written onto the edge by the model
* f5: zero-trust compliance flag

A path is critical when it starts at an easily-reached asset (criticality
<= 4), ends at a mission-critical level-7 asset, and spans at most 5 hops.
Edges are sorted into safe / compliant-critical / non-compliant-critical;
the verdict class always agrees with the edge's known compliance flag.
"""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass

import numpy as np

from .errors import DegenerateDataError
from .netgraph import Asset, ConnectivityGraph, EdgeKey
from .nn import MLPClassifier
from .oracle import (
    TriageParams,
    path_start_nodes,
    path_target_nodes,
    true_critical_edges,
)
from .preprocess import AttackSurfaceGraph, max_qualifying_score

CLASS_SAFE = "safe"
CLASS_COMPLIANT_CRITICAL = "compliant-critical"
CLASS_NONCOMPLIANT_CRITICAL = "non-compliant-critical"
CLASSES = (CLASS_SAFE, CLASS_COMPLIANT_CRITICAL, CLASS_NONCOMPLIANT_CRITICAL)

APP_CODE = {"non-critical": 0, "business-critical": 1, "mission-critical": 2}

FEATURE_NAMES = ("f1_dst_level", "f2_dst_app", "f3_src_vuln", "f4_edge_sp", "f5_compliant")


def band_f1(level: int) -> str:
    if level == 7:
        return "7"
    return "5-6" if level >= 5 else "0-4"


def band_f3(score: float) -> str:
    if score <= 0.0:
        return "none"
    return "critical" if score >= 9.0 else "high"


def bucket_f4(sp: int) -> str:
    return str(sp) if 1 <= sp <= 5 else "beyond"


def build_edge_features(
    surface: AttackSurfaceGraph,
    assets: dict[str, Asset],
    edge_sp: dict[EdgeKey, int],
) -> tuple[np.ndarray, list[EdgeKey]]:
    """Feature matrix aligned with surface.edges order."""
    rows = []
    keys = []
    for edge in surface.edges:
        dst = assets[edge.dst]
        src = assets[edge.src]
        rows.append(
            [
                float(dst.criticality),
                float(APP_CODE[dst.app_criticality]),
                max_qualifying_score(src),
                float(edge_sp[edge.key]),
                1.0 if edge.compliant else 0.0,
            ]
        )
        keys.append(edge.key)
    return np.array(rows, dtype=float), keys


def oracle_edge_classes(
    surface: AttackSurfaceGraph,
    assets: dict[str, Asset],
    params: TriageParams,
) -> dict[EdgeKey, str]:
    """Ground-truth verdict class for every surface edge, by exact search."""
    critical = true_critical_edges(surface, assets, params)
    classes = {}
    for edge in surface.edges:
        if edge.key not in critical:
            classes[edge.key] = CLASS_SAFE
        elif edge.compliant:
            classes[edge.key] = CLASS_COMPLIANT_CRITICAL
        else:
            classes[edge.key] = CLASS_NONCOMPLIANT_CRITICAL
    return classes


@dataclass(frozen=True)
class PathDescriptor:
    start: str
    target: str
    length: int
    predicted_start_sp: int | None = None


def filter_critical_paths(
    surface: AttackSurfaceGraph,
    assets: dict[str, Asset],
    params: TriageParams,
    prediction=None,
) -> set[PathDescriptor]:
    """Qualifying (start, target) pairs with their shortest length.

    The search is exact and depth-bounded; when a prediction is supplied
    each descriptor is annotated with the model's distance for its start.
    """
    starts = path_start_nodes(surface, assets, params)
    targets = path_target_nodes(surface, assets, params)
    adj: dict[str, list[str]] = {node: [] for node in surface.nodes}
    for edge in surface.edges:
        adj[edge.src].append(edge.dst)
    found: set[PathDescriptor] = set()
    for start in sorted(starts):
        dist = {start: 0}
        queue = deque([start])
        while queue:
            node = queue.popleft()
            d = dist[node] + 1
            if d > params.path_length_limit:
                continue
            for neighbor in adj[node]:
                if neighbor not in dist:
                    dist[neighbor] = d
                    queue.append(neighbor)
        for target in sorted(targets):
            d = dist.get(target)
            if d is not None and 1 <= d <= params.path_length_limit:
                sp = prediction.sp_of(start) if prediction is not None else None
                found.add(
                    PathDescriptor(
                        start=start, target=target, length=d, predicted_start_sp=sp
                    )
                )
    return found


@dataclass
class EdgeClassifier:
    mlp: MLPClassifier


def train_edge_classifier(
    features: np.ndarray,
    classes: list[str] | np.ndarray,
    seed: int = 0,
    epochs: int = 200,
    lr: float = 0.05,
    momentum: float = 0.9,
) -> tuple[EdgeClassifier, list[float]]:
    """Fit the three-class verdict network (two hidden layers of 16)."""
    y = np.array([CLASSES.index(c) if isinstance(c, str) else int(c) for c in classes])
    mlp = MLPClassifier(
        input_dim=features.shape[1], hidden=(16, 16), n_classes=len(CLASSES), seed=seed
    )
    trace = mlp.fit(features, y, epochs=epochs, lr=lr, momentum=momentum)
    return EdgeClassifier(mlp=mlp), trace


@dataclass(frozen=True)
class EdgeVerdict:
    edge: EdgeKey
    verdict: str
    score_safe: float
    score_compliant_critical: float
    score_noncompliant_critical: float
    policy_id: str
    compliant: bool

    def scores(self) -> tuple[float, float, float]:
        return (
            self.score_safe,
            self.score_compliant_critical,
            self.score_noncompliant_critical,
        )


def classify_edges(
    classifier: EdgeClassifier,
    graph: ConnectivityGraph,
    surface: AttackSurfaceGraph,
    features: np.ndarray,
    feature_keys: list[EdgeKey],
) -> list[EdgeVerdict]:
    """Verdicts for every graph edge.

    Surface edges are scored by the classifier; the verdict is the highest
    score among the classes consistent with the edge's compliance flag, so
    a compliant edge can never be judged non-compliant-critical. Edges
    outside the attack surface default to safe without model invocation.
    """
    probs = classifier.mlp.predict_proba(features)
    by_key = {key: probs[i] for i, key in enumerate(feature_keys)}
    verdicts = []
    for edge in graph.edges:
        p = by_key.get(edge.key)
        if p is None:
            verdicts.append(
                EdgeVerdict(
                    edge=edge.key,
                    verdict=CLASS_SAFE,
                    score_safe=1.0,
                    score_compliant_critical=0.0,
                    score_noncompliant_critical=0.0,
                    policy_id=edge.policy_id,
                    compliant=edge.compliant,
                )
            )
            continue
        allowed = (0, 1) if edge.compliant else (0, 2)
        winner = max(allowed, key=lambda i: p[i])
        verdicts.append(
            EdgeVerdict(
                edge=edge.key,
                verdict=CLASSES[winner],
                score_safe=float(p[0]),
                score_compliant_critical=float(p[1]),
                score_noncompliant_critical=float(p[2]),
                policy_id=edge.policy_id,
                compliant=edge.compliant,
            )
        )
    return verdicts


def roc_auc(truth: np.ndarray, scores: np.ndarray) -> float:
    """Area under the ROC curve via tie-averaged ranks.

    truth is boolean (edge truly critical); scores are the model's
    criticality scores. Raises DegenerateDataError when truth has a
    single class, where the curve is undefined.
    """
    truth = np.asarray(truth, dtype=bool)
    scores = np.asarray(scores, dtype=float)
    n_pos = int(truth.sum())
    n_neg = truth.size - n_pos
    if n_pos == 0 or n_neg == 0:
        raise DegenerateDataError(
            f"AUC undefined: truth contains a single class "
            f"({n_pos} positive / {n_neg} negative)"
        )
    order = np.argsort(scores, kind="mergesort")
    ranks = np.empty(truth.size, dtype=float)
    sorted_scores = scores[order]
    i = 0
    while i < truth.size:
        j = i
        while j + 1 < truth.size and sorted_scores[j + 1] == sorted_scores[i]:
            j += 1
        ranks[order[i : j + 1]] = 0.5 * (i + j) + 1.0
        i = j + 1
    pos_ranks = ranks[truth].sum()
    return float((pos_ranks - n_pos * (n_pos + 1) / 2.0) / (n_pos * n_neg))


def criticality_scores(verdicts: list[EdgeVerdict]) -> np.ndarray:
    """Score that an edge is on a critical path: 1 - P(safe)."""
    return np.array([1.0 - v.score_safe for v in verdicts])
