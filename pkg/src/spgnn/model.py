"""Positional graph network that learns hop distances to critical assets.

Every anchor set contributes one channel per node: the channel input
encodes the truncated hop distance from the node to the set as a
thermometer row (cumulative d <= j bits plus a reached bit), and L
message-passing rounds mix each channel along out-edges with mean
aggregation. Layer weights are shared across channels, so the channel count
(and with it the embedding width) follows the anchor layout of whatever
graph the model is applied to; that is what lets a trained model transfer
to a graph with a different number of critical assets.

The embedding distance T_u[i] = sum_n |h_u[n] - h_{v_i}[n]| is taken
against each critical asset's own singleton channel; its minimum z_u is the
learned distance, trained with MSE against the label table and read out
either by half-up rounding or by the stacked distance-class head.
"""

from __future__ import annotations

import logging
import math
from collections import deque
import dataclasses
from dataclasses import dataclass

import numpy as np
from scipy import sparse

from .errors import DegenerateDataError, TrainingDivergedError, TransferUnsupportedError
from .netgraph import EdgeKey
from .nn import MLPClassifier
from .oracle import LabelTable
from .preprocess import AttackSurfaceGraph

log = logging.getLogger(__name__)

CHECKPOINT_VERSION = 1

# leaky-rectifier slope: a strictly monotone activation keeps gradients
# alive everywhere, so training cannot park in an all-dead region
LEAK = 0.05


@dataclass(frozen=True)
class SPGNNConfig:
    q: int = 4  # distance truncation horizon; input row sees hops < q
    rounds: int = 4  # message-passing rounds; reach = q - 1 + rounds
    width: int = 16  # per-channel hidden width
    lr: float = 0.10
    momentum: float = 0.9
    batch_size: int = 32
    epochs: int = 20
    anchor_c: float = 1.0
    threshold_b: int = 6  # distance-class head: classes 0..b, b = "beyond"
    train_split: float = 0.8
    grad_clip: float = 1.0  # global-norm bound; loss gradients scale with k
    dnn_hidden: tuple[int, ...] = (32, 32, 32)
    dnn_epochs: int = 200
    dnn_lr: float = 0.05

    def validate(self) -> None:
        if self.q < 1:
            raise ValueError("q must be >= 1")
        if self.rounds < 1:
            raise ValueError("rounds must be >= 1")
        if self.width < 1:
            raise ValueError("width must be >= 1")
        if not 0.0 < self.train_split < 1.0:
            raise ValueError("train_split must lie in (0, 1)")
        if self.anchor_c <= 0.0:
            raise ValueError("anchor_c must be positive")
        if self.threshold_b < 1:
            raise ValueError("threshold_b must be >= 1")
        if self.grad_clip <= 0.0:
            raise ValueError("grad_clip must be positive")


@dataclass
class AnchorScheme:
    """Ordered anchor sets; the first n_critical are critical singletons."""

    sets: list[tuple[str, ...]]
    n_critical: int
    c: float

    @property
    def k(self) -> int:
        return len(self.sets)

    def critical_ids(self) -> tuple[str, ...]:
        return tuple(s[0] for s in self.sets[: self.n_critical])


def anchor_count(n_nodes: int, n_critical: int, c: float) -> int:
    return max(math.ceil(c * math.log(n_nodes) ** 2), n_critical)


def build_anchors(
    nodes: set[str] | list[str],
    critical: set[str],
    c: float = 1.0,
    seed: int = 0,
) -> AnchorScheme:
    """Build the anchor layout for a surface graph.

    Critical assets present in the graph each get a singleton set, in
    sorted id order. Any remaining sets are random subsets of non-critical
    nodes with geometrically shrinking sizes floor(n / 2^(i+1)), clamped
    to at least one node, sampled without replacement within a set.
    """
    node_list = sorted(nodes)
    n = len(node_list)
    if n < 2:
        raise ValueError(f"need at least 2 nodes to build anchors, got {n}")
    if c <= 0.0:
        raise ValueError("anchor scale c must be positive")
    singles = sorted(critical & set(node_list))
    n_critical = len(singles)
    k = anchor_count(n, n_critical, c)
    sets: list[tuple[str, ...]] = [(v,) for v in singles]
    pool = np.array([v for v in node_list if v not in critical], dtype=object)
    rng = np.random.default_rng(seed)
    if len(pool) == 0:
        # every node is critical: nothing to sample random sets from
        k = n_critical
    for i in range(k - n_critical):
        size = max(1, min(n // (2 ** (i + 1)), len(pool)))
        picked = rng.choice(pool, size=size, replace=False)
        sets.append(tuple(sorted(picked.tolist())))
    return AnchorScheme(sets=sets, n_critical=n_critical, c=c)


def qhop_distance(
    surface: AttackSurfaceGraph, u: str, v: str, q: int
) -> tuple[float, float]:
    """Truncated hop distance u -> v and its message weight.

    Returns (d, 1 / (d + 1)) when the shortest path has d < q hops, else
    (inf, 0.0).
    """
    if q < 1:
        raise ValueError("q must be >= 1")
    if u == v:
        return (0.0, 1.0)
    adj: dict[str, list[str]] = {node: [] for node in surface.nodes}
    for edge in surface.edges:
        adj[edge.src].append(edge.dst)
    dist = {u: 0}
    queue = deque([u])
    while queue:
        node = queue.popleft()
        d = dist[node] + 1
        if d >= q:
            continue
        for neighbor in adj[node]:
            if neighbor not in dist:
                dist[neighbor] = d
                if neighbor == v:
                    return (float(d), 1.0 / (d + 1.0))
                queue.append(neighbor)
    return (math.inf, 0.0)


class GraphTensors:
    """Index arrays, anchor inputs, and scratch buffers for one surface graph."""

    def __init__(self, surface: AttackSurfaceGraph, anchors: AnchorScheme, q: int):
        self.nodes: tuple[str, ...] = tuple(sorted(surface.nodes))
        self.index: dict[str, int] = {v: i for i, v in enumerate(self.nodes)}
        n = len(self.nodes)

        src = np.array([self.index[e.src] for e in surface.edges], dtype=np.int64)
        dst = np.array([self.index[e.dst] for e in surface.edges], dtype=np.int64)
        # per-edge message weight: 1/(d+1) truncated at q hops, so a self-loop
        # echoes the node's own state at double the strength of a neighbor
        loop = src == dst
        weight = np.where(loop, 1.0, 0.5 if q >= 2 else 0.0).astype(np.float32)

        outdeg = np.bincount(src, minlength=n).astype(np.float32)
        mean_weight = weight / np.maximum(outdeg, 1.0)[src]
        agg = sparse.csr_matrix((mean_weight, (src, dst)), shape=(n, n))
        self._agg = agg
        self._agg_t = agg.T.tocsr()

        self.x = self._anchor_weights(surface, anchors, q)
        self.critical_rows = np.array(
            [self.index[v] for v in anchors.critical_ids()], dtype=np.int64
        )
        self._scratch: dict[tuple, np.ndarray] = {}

    def scratch(self, name: str, shape: tuple[int, ...]) -> np.ndarray:
        """Reusable uninitialized buffer; callers overwrite it fully."""
        key = (name, shape)
        buf = self._scratch.get(key)
        if buf is None:
            buf = np.empty(shape, dtype=np.float32)
            self._scratch[key] = buf
        return buf

    def scratch_bool(self, name: str, shape: tuple[int, ...]) -> np.ndarray:
        key = (name, shape)
        buf = self._scratch.get(key)
        if buf is None:
            buf = np.empty(shape, dtype=bool)
            self._scratch[key] = buf
        return buf

    def _anchor_weights(
        self, surface: AttackSurfaceGraph, anchors: AnchorScheme, q: int
    ) -> np.ndarray:
        """Thermometer row per (node, set): x[u, i, j] = 1 iff d(u, set i) <= j
        for j < q - 1, and x[u, i, q - 1] = 1 iff the set is within q - 1 hops.
        Cumulative bits keep adjacent distances a full unit apart, so the
        distance readout the training must learn is linear in the input.
        """
        n = len(self.nodes)
        in_adj: dict[str, list[str]] = {node: [] for node in self.nodes}
        for edge in surface.edges:
            in_adj[edge.dst].append(edge.src)
        x = np.zeros((n, anchors.k, q), dtype=np.float32)
        for i, members in enumerate(anchors.sets):
            dist = {m: 0 for m in members if m in self.index}
            queue = deque(dist)
            while queue:
                node = queue.popleft()
                d = dist[node] + 1
                if d >= q:
                    continue
                for pred in in_adj[node]:
                    if pred not in dist:
                        dist[pred] = d
                        queue.append(pred)
            for node, d in dist.items():
                row = self.index[node]
                x[row, i, d : q - 1] = 1.0
                x[row, i, q - 1] = 1.0
        return x

    @property
    def n_nodes(self) -> int:
        return len(self.nodes)

    def aggregate(self, state: np.ndarray) -> np.ndarray:
        """Mean of weighted out-neighbor states, zero for sink nodes."""
        n, k, width = state.shape
        return (self._agg @ state.reshape(n, k * width)).reshape(n, k, width)

    def aggregate_backward(self, grad: np.ndarray) -> np.ndarray:
        """Adjoint of aggregate: scatter gradient back to source states."""
        n, k, width = grad.shape
        return (self._agg_t @ grad.reshape(n, k * width)).reshape(n, k, width)


def init_weights(config: SPGNNConfig, rng: np.random.Generator) -> list[list[np.ndarray]]:
    """He-initialized layer weights; the final round maps to one channel."""
    dims = [config.q] + [config.width] * (config.rounds - 1) + [1]
    weights = []
    for fan_in, fan_out in zip(dims[:-1], dims[1:]):
        scale = np.sqrt(2.0 / (2 * fan_in))
        w = rng.normal(0.0, scale, size=(2 * fan_in, fan_out)).astype(np.float32)
        b = np.zeros(fan_out, dtype=np.float32)
        weights.append([w, b])
    return weights


def _forward(
    tensors: GraphTensors,
    weights: list[list[np.ndarray]],
    keep_caches: bool = False,
) -> tuple[np.ndarray, list]:
    """Message-passing rounds; each layer maps [state, message] @ w + b.

    The weight matrix stacks the state half on top of the message half, so
    the product is computed as two half matmuls without materializing the
    concatenation. Intermediate arrays live in the tensors scratch pool;
    the returned embedding is an owned copy.
    """
    state = tensors.x
    caches = []
    last = len(weights) - 1
    n, k = tensors.x.shape[:2]
    for i, (w, b) in enumerate(weights):
        message = tensors.aggregate(state)
        half = state.shape[2]
        out_dim = w.shape[1]
        z = tensors.scratch(f"z{i}", (n * k, out_dim))
        np.matmul(state.reshape(n * k, half), w[:half], out=z)
        zm = tensors.scratch(f"zm{i}", (n * k, out_dim))
        np.matmul(message.reshape(n * k, half), w[half:], out=zm)
        z += zm
        z += b
        z3 = z.reshape(n, k, out_dim)
        if keep_caches:
            caches.append((state, message, z3))
        if i == last:
            state = z3
        else:
            # the zm buffer is free after the sum; reuse it for the leaky
            # rectifier output
            np.multiply(z, LEAK, out=zm)
            np.maximum(z, zm, out=zm)
            state = zm.reshape(n, k, out_dim)
    return state[:, :, 0].copy(), caches


def _backward(
    tensors: GraphTensors,
    weights: list[list[np.ndarray]],
    caches: list,
    grad_h: np.ndarray,
) -> list[list[np.ndarray]]:
    n, k = grad_h.shape
    grads = [None] * len(weights)
    gz = np.ascontiguousarray(grad_h.reshape(n * k, 1), dtype=np.float32)
    for i in range(len(weights) - 1, -1, -1):
        state, message, z = caches[i]
        half = state.shape[2]
        out_dim = z.shape[2]
        if i != len(weights) - 1:
            z_flat = z.reshape(n * k, out_dim)
            mask = tensors.scratch_bool(f"gb{i}", z_flat.shape)
            np.greater(z_flat, 0.0, out=mask)
            deriv = tensors.scratch(f"gd{i}", z_flat.shape)
            np.multiply(mask, np.float32(1.0 - LEAK), out=deriv, casting="unsafe")
            deriv += np.float32(LEAK)
            gz *= deriv
        w, _ = weights[i]
        grad_w = np.empty((2 * half, out_dim), dtype=np.float32)
        np.matmul(state.reshape(n * k, half).T, gz, out=grad_w[:half])
        np.matmul(message.reshape(n * k, half).T, gz, out=grad_w[half:])
        grads[i] = [grad_w, gz.sum(axis=0)]
        if i == 0:
            break  # input features take no gradient
        grad_msg = tensors.scratch(f"gm{i}", (n * k, half))
        np.matmul(gz, w[half:].T, out=grad_msg)
        grad_state = tensors.scratch(f"gs{i}", (n * k, half))
        np.matmul(gz, w[:half].T, out=grad_state)
        view = grad_state.reshape(n, k, half)
        view += tensors.aggregate_backward(grad_msg.reshape(n, k, half))
        gz = grad_state
    return grads


def _min_distance(
    embeddings: np.ndarray, critical_rows: np.ndarray, rows: np.ndarray
) -> tuple[np.ndarray, np.ndarray]:
    """z and argmin critical index for the given embedding rows."""
    z = np.empty(rows.size)
    arg = np.empty(rows.size, dtype=np.int64)
    crit = embeddings[critical_rows]
    chunk = 128
    for start in range(0, rows.size, chunk):
        idx = rows[start : start + chunk]
        t = np.abs(embeddings[idx][:, None, :] - crit[None, :, :]).sum(axis=2)
        z[start : start + chunk] = t.min(axis=1)
        arg[start : start + chunk] = t.argmin(axis=1)
    return z, arg


@dataclass
class SPGNNModel:
    config: SPGNNConfig
    anchors: AnchorScheme
    weights: list[list[np.ndarray]]
    seed: int


@dataclass
class TrainRecord:
    loss_trace: list[float]
    train_nodes: tuple[str, ...]
    test_nodes: tuple[str, ...]
    epochs: int
    seed: int


def split_mask(
    n: int, train_split: float, rng: np.random.Generator
) -> tuple[np.ndarray, np.ndarray]:
    order = rng.permutation(n)
    n_train = int(round(train_split * n))
    n_train = min(max(n_train, 1), n - 1) if n > 1 else n
    return np.sort(order[:n_train]), np.sort(order[n_train:])


def train(
    surface: AttackSurfaceGraph,
    labels: LabelTable,
    anchors: AnchorScheme,
    config: SPGNNConfig,
    seed: int = 0,
) -> tuple[SPGNNModel, TrainRecord]:
    """Fit the positional network against the label table.

    Every step runs a full-graph forward pass (message passing couples all
    nodes) and applies the MSE loss on one shuffled mini-batch of training
    nodes. The recorded trace holds the full training-mask loss after each
    epoch. Raises TrainingDivergedError when the loss stops being finite.
    """
    config.validate()
    if anchors.n_critical == 0:
        raise DegenerateDataError("no critical assets in the surface graph")
    tensors = GraphTensors(surface, anchors, config.q)
    n = tensors.n_nodes
    y = np.array([labels.label(v) for v in tensors.nodes], dtype=float)

    rng = np.random.default_rng(seed)
    weights = init_weights(config, rng)
    train_rows, test_rows = split_mask(n, config.train_split, rng)
    # critical assets are distance 0 to themselves by construction, so they
    # never produce a gradient; batches draw from the informative rows only
    critical_set = set(tensors.critical_rows.tolist())
    step_rows = np.array([r for r in train_rows if r not in critical_set])
    if step_rows.size == 0:
        step_rows = train_rows

    velocity = [[np.zeros_like(w), np.zeros_like(b)] for w, b in weights]
    trace: list[float] = []
    # tail-averaged iterates: the returned model uses the mean of the
    # weights over the final quarter of epochs, which damps the step noise
    # that otherwise decides how cluster centers land against rounding
    avg_from = config.epochs - max(config.epochs // 4, 1) + 1
    averaged: list[list[np.ndarray]] | None = None
    n_averaged = 0
    for epoch in range(1, config.epochs + 1):
        # linear decay lets late epochs settle instead of bouncing around
        # the minimum, which matters for integer rounding downstream
        lr = config.lr * (1.0 - 0.9 * (epoch - 1) / max(config.epochs - 1, 1))
        order = rng.permutation(step_rows.size)
        for start in range(0, step_rows.size, config.batch_size):
            batch = step_rows[order[start : start + config.batch_size]]
            embeddings, caches = _forward(tensors, weights, keep_caches=True)
            z, arg = _min_distance(embeddings, tensors.critical_rows, batch)
            dz = 2.0 * (z - y[batch]) / batch.size
            nearest = tensors.critical_rows[arg]
            diff = embeddings[batch] - embeddings[nearest]
            # smoothed |x| subgradient: keeps a usable direction near zero,
            # so identical embeddings are not an absorbing state
            slope = diff / np.sqrt(diff * diff + 1e-4)
            grad_h = np.zeros_like(embeddings)
            np.add.at(grad_h, batch, dz[:, None] * slope)
            np.add.at(grad_h, nearest, -dz[:, None] * slope)
            grads = _backward(tensors, weights, caches, grad_h)
            gnorm = math.sqrt(
                sum(float((g**2).sum()) for gw_gb in grads for g in gw_gb)
            )
            if gnorm > config.grad_clip:
                scale = config.grad_clip / gnorm
                for gw, gb in grads:
                    gw *= scale
                    gb *= scale
            for (w, b), (vw, vb), (gw, gb) in zip(weights, velocity, grads):
                vw *= config.momentum
                vw += gw
                vb *= config.momentum
                vb += gb
                w -= lr * vw
                b -= lr * vb
        embeddings, _ = _forward(tensors, weights)
        z, _ = _min_distance(embeddings, tensors.critical_rows, train_rows)
        loss = float(np.mean((z - y[train_rows]) ** 2))
        if not np.isfinite(loss):
            raise TrainingDivergedError(epoch)
        trace.append(loss)
        if epoch >= avg_from:
            if averaged is None:
                averaged = [[w.copy(), b.copy()] for w, b in weights]
            else:
                for (aw, ab), (w, b) in zip(averaged, weights):
                    aw += w
                    ab += b
            n_averaged += 1

    if averaged is not None and n_averaged > 1:
        weights = [[aw / n_averaged, ab / n_averaged] for aw, ab in averaged]

    # readout calibration: the leaky rectifier is positively homogeneous, so
    # scaling the last layer by a > 0 scales every embedding channel — and
    # with it every minimum L1 distance — by exactly a. A short line search
    # picks the scale whose half-up rounded distances agree best with the
    # training labels; this recenters runs whose distance clusters settled
    # slightly off the integer grid (visible as high within-one but low
    # exact agreement) and is a no-op for runs that are already centered.
    embeddings, _ = _forward(tensors, weights)
    z, _ = _min_distance(embeddings, tensors.critical_rows, step_rows)
    target = y[step_rows]
    best = (-1.0, -1.0, -math.inf)
    best_scale = 1.0
    for scale in np.round(np.linspace(0.8, 1.3, 51), 2):
        sp = np.floor(scale * z + 0.5)
        err = np.abs(sp - target)
        key = (float((err == 0).mean()), float((err <= 1).mean()), -abs(scale - 1.0))
        if key > best:
            best = key
            best_scale = float(scale)
    if best_scale != 1.0:
        weights[-1][0] = weights[-1][0] * best_scale
        weights[-1][1] = weights[-1][1] * best_scale
    model = SPGNNModel(config=config, anchors=anchors, weights=weights, seed=seed)
    record = TrainRecord(
        loss_trace=trace,
        train_nodes=tuple(tensors.nodes[i] for i in train_rows),
        test_nodes=tuple(tensors.nodes[i] for i in test_rows),
        epochs=config.epochs,
        seed=seed,
    )
    return model, record


@dataclass
class PathPrediction:
    """Recovered distances and embeddings for one surface graph."""

    nodes: tuple[str, ...]
    index: dict[str, int]
    z: np.ndarray  # minimum embedding distance per node
    sp: np.ndarray  # half-up rounded distance per node
    embeddings: np.ndarray
    critical_rows: np.ndarray
    critical_ids: tuple[str, ...]

    def z_of(self, node: str) -> float:
        return float(self.z[self.index[node]])

    def sp_of(self, node: str) -> int:
        return int(self.sp[self.index[node]])

    def sp_table(self) -> dict[str, int]:
        return {v: int(self.sp[i]) for i, v in enumerate(self.nodes)}


def recover_distances(
    model: SPGNNModel,
    surface: AttackSurfaceGraph,
    anchors: AnchorScheme | None = None,
) -> PathPrediction:
    """Embed the surface graph and read distances back out.

    The prediction for each node is the minimum absolute-difference
    distance to a critical singleton channel, rounded half-up.
    """
    anchors = anchors or model.anchors
    tensors = GraphTensors(surface, anchors, model.config.q)
    embeddings, _ = _forward(tensors, model.weights)
    rows = np.arange(tensors.n_nodes)
    z, _ = _min_distance(embeddings, tensors.critical_rows, rows)
    sp = np.floor(z + 0.5).astype(int)
    return PathPrediction(
        nodes=tensors.nodes,
        index=dict(tensors.index),
        z=z,
        sp=sp,
        embeddings=embeddings,
        critical_rows=tensors.critical_rows,
        critical_ids=anchors.critical_ids(),
    )


def assign_edge_features(
    prediction: PathPrediction, surface: AttackSurfaceGraph
) -> dict[EdgeKey, int]:
    """Write each node's predicted distance onto its incident out-edges."""
    return {e.key: prediction.sp_of(e.src) for e in surface.edges}


def distance_metrics(
    prediction_by_node: dict[str, int],
    labels: LabelTable,
    nodes: tuple[str, ...] | list[str],
) -> dict[str, float]:
    """Exact and within-one-hop agreement over the given nodes."""
    if not nodes:
        raise ValueError("no nodes to score")
    diffs = np.array(
        [abs(prediction_by_node[v] - labels.label(v)) for v in nodes], dtype=float
    )
    return {
        "n": int(diffs.size),
        "exact": float(np.mean(diffs == 0)),
        "within_one": float(np.mean(diffs <= 1.0)),
    }


# ---------------------------------------------------------------------------
# Distance-class head


@dataclass
class DNNHead:
    mlp: MLPClassifier
    threshold_b: int


DNN_FEATURE_NAMES = (
    "max_abs_cosine",
    "max_cross_entropy",
    "embed_min",
    "embed_max",
    "embed_mean",
    "embed_var",
    "embed_norm2",
    "embed_std",
    "embed_median",
    "min_distance",
)


def build_dnn_features(prediction: PathPrediction) -> np.ndarray:
    """Ten summary features per node for the distance-class head."""
    h = prediction.embeddings
    crit = h[prediction.critical_rows]

    norms = np.linalg.norm(h, axis=1)
    crit_norms = norms[prediction.critical_rows]
    zero_rows = int(np.sum(norms == 0.0))
    if zero_rows:
        log.warning(
            "%d node embeddings have zero magnitude; their cosine "
            "similarity features are set to 0",
            zero_rows,
        )
    safe = np.where(norms > 0.0, norms, 1.0)
    safe_crit = np.where(crit_norms > 0.0, crit_norms, 1.0)
    cos = (h / safe[:, None]) @ (crit / safe_crit[:, None]).T
    cos[norms == 0.0, :] = 0.0
    cos[:, crit_norms == 0.0] = 0.0
    max_cos = np.abs(cos).max(axis=1)

    log_p = h - _logsumexp(h)
    p_crit = np.exp(log_p[prediction.critical_rows])
    cross = -(log_p @ p_crit.T)
    max_cross = cross.max(axis=1)

    features = np.column_stack(
        [
            max_cos,
            max_cross,
            h.min(axis=1),
            h.max(axis=1),
            h.mean(axis=1),
            h.var(axis=1),
            norms,
            h.std(axis=1),
            np.median(h, axis=1),
            prediction.z,
        ]
    )
    return features


def _logsumexp(h: np.ndarray) -> np.ndarray:
    m = h.max(axis=1, keepdims=True)
    return m + np.log(np.exp(h - m).sum(axis=1, keepdims=True))


def distance_classes(labels_arr: np.ndarray, threshold_b: int) -> np.ndarray:
    """Map hop labels to classes 0..b where class b means 'b or beyond'."""
    return np.minimum(labels_arr, threshold_b)


def train_dnn_head(
    features: np.ndarray,
    labels_arr: np.ndarray,
    train_rows: np.ndarray,
    config: SPGNNConfig,
    seed: int = 0,
) -> tuple[DNNHead, list[float]]:
    """Fit the stacked distance-class head on training-mask nodes."""
    targets = distance_classes(np.asarray(labels_arr, dtype=int), config.threshold_b)
    mlp = MLPClassifier(
        input_dim=features.shape[1],
        hidden=config.dnn_hidden,
        n_classes=config.threshold_b + 1,
        seed=seed,
    )
    trace = mlp.fit(
        features[train_rows],
        targets[train_rows],
        epochs=config.dnn_epochs,
        lr=config.dnn_lr,
        momentum=config.momentum,
    )
    return DNNHead(mlp=mlp, threshold_b=config.threshold_b), trace


def predict_dnn(head: DNNHead, features: np.ndarray) -> np.ndarray:
    return head.mlp.predict(features)


# ---------------------------------------------------------------------------
# Transfer and checkpointing


def transfer_model(
    model: SPGNNModel,
    surface: AttackSurfaceGraph,
    critical: set[str],
    seed: int = 0,
) -> tuple[AnchorScheme, PathPrediction]:
    """Apply a trained model to a different surface graph.

    Only the rounding head transfers: the layer weights are shared across
    anchor channels, so a new anchor layout (different critical-asset
    count) changes nothing about their shapes.
    """
    anchors = build_anchors(surface.nodes, critical, c=model.config.anchor_c, seed=seed)
    if anchors.n_critical == 0:
        raise DegenerateDataError("target graph has no critical assets in its surface")
    return anchors, recover_distances(model, surface, anchors)


def refuse_dnn_transfer() -> None:
    raise TransferUnsupportedError(
        "the distance-class head does not transfer: its inputs are summary "
        "statistics of embeddings whose scale and distribution are tied to "
        "the anchor layout of the training graph (a fixed input size over a "
        "graph-specific embedding). Transfer supports the rounding head "
        "only; pass --head round."
    )


def model_to_dict(model: SPGNNModel) -> dict:
    config = dataclasses.asdict(model.config)
    config["dnn_hidden"] = list(model.config.dnn_hidden)
    return {
        "format_version": CHECKPOINT_VERSION,
        "kind": "spgnn-checkpoint",
        "seed": model.seed,
        "config": config,
        "anchors": {
            "sets": [list(s) for s in model.anchors.sets],
            "n_critical": model.anchors.n_critical,
            "c": model.anchors.c,
        },
        "weights": [{"w": w.tolist(), "b": b.tolist()} for w, b in model.weights],
    }


def model_from_dict(data: dict) -> SPGNNModel:
    if data.get("kind") != "spgnn-checkpoint":
        raise ValueError("not a model checkpoint")
    if data.get("format_version") != CHECKPOINT_VERSION:
        raise ValueError(
            f"unsupported checkpoint version {data.get('format_version')!r}"
        )
    raw = dict(data["config"])
    raw["dnn_hidden"] = tuple(raw.get("dnn_hidden", (32, 32, 32)))
    config = SPGNNConfig(**raw)
    anchors = AnchorScheme(
        sets=[tuple(s) for s in data["anchors"]["sets"]],
        n_critical=data["anchors"]["n_critical"],
        c=data["anchors"]["c"],
    )
    weights = [
        [
            np.array(layer["w"], dtype=np.float32),
            np.array(layer["b"], dtype=np.float32),
        ]
        for layer in data["weights"]
    ]
    return SPGNNModel(
        config=config, anchors=anchors, weights=weights, seed=data["seed"]
    )
