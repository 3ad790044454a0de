"""Small fully-connected softmax classifier trained with SGD + momentum.

Shared by the distance-class head and the edge triage classifier. Inputs
are standardized with statistics from the training rows; weights use He
initialization from a seeded generator, so a fit is reproducible bit for
bit given the same data and seed.
"""

from __future__ import annotations

import numpy as np

from .errors import DegenerateDataError, TrainingDivergedError


def softmax(z: np.ndarray) -> np.ndarray:
    shifted = z - z.max(axis=1, keepdims=True)
    e = np.exp(shifted)
    return e / e.sum(axis=1, keepdims=True)


class MLPClassifier:
    def __init__(self, input_dim: int, hidden: tuple[int, ...], n_classes: int, seed: int):
        self.input_dim = input_dim
        self.hidden = tuple(hidden)
        self.n_classes = n_classes
        self.seed = seed
        rng = np.random.default_rng(seed)
        dims = [input_dim, *hidden, n_classes]
        self.weights: list[np.ndarray] = []
        self.biases: list[np.ndarray] = []
        for fan_in, fan_out in zip(dims[:-1], dims[1:]):
            scale = np.sqrt(2.0 / fan_in)
            self.weights.append(rng.normal(0.0, scale, size=(fan_in, fan_out)))
            self.biases.append(np.zeros(fan_out))
        self.feature_mean = np.zeros(input_dim)
        self.feature_std = np.ones(input_dim)

    def _standardize(self, x: np.ndarray) -> np.ndarray:
        return (x - self.feature_mean) / self.feature_std

    def _forward(self, x: np.ndarray, caches: list | None = None) -> np.ndarray:
        a = x
        last = len(self.weights) - 1
        for i, (w, b) in enumerate(zip(self.weights, self.biases)):
            z = a @ w + b
            if caches is not None:
                caches.append((a, z))
            a = z if i == last else np.maximum(z, 0.0)
        return a

    def fit(
        self,
        x: np.ndarray,
        y: np.ndarray,
        epochs: int = 200,
        lr: float = 0.05,
        momentum: float = 0.9,
        batch_size: int = 64,
    ) -> list[float]:
        """Train on integer class labels; returns the per-epoch loss trace."""
        x = np.asarray(x, dtype=float)
        y = np.asarray(y, dtype=int)
        observed = np.unique(y)
        if observed.size < 2:
            raise DegenerateDataError(
                f"training data contains a single class ({observed.tolist()}); "
                "nothing separates it"
            )
        if y.min() < 0 or y.max() >= self.n_classes:
            raise ValueError(
                f"labels outside [0, {self.n_classes - 1}]: "
                f"saw {y.min()}..{y.max()}"
            )
        self.feature_mean = x.mean(axis=0)
        std = x.std(axis=0)
        self.feature_std = np.where(std > 0.0, std, 1.0)
        xs = self._standardize(x)
        onehot = np.eye(self.n_classes)[y]

        rng = np.random.default_rng(self.seed + 1)
        vel_w = [np.zeros_like(w) for w in self.weights]
        vel_b = [np.zeros_like(b) for b in self.biases]
        n = xs.shape[0]
        trace: list[float] = []
        for epoch in range(1, epochs + 1):
            order = rng.permutation(n)
            for start in range(0, n, batch_size):
                idx = order[start : start + batch_size]
                caches: list = []
                logits = self._forward(xs[idx], caches)
                probs = softmax(logits)
                delta = (probs - onehot[idx]) / idx.size
                for i in range(len(self.weights) - 1, -1, -1):
                    a_in, z = caches[i]
                    grad_w = a_in.T @ delta
                    grad_b = delta.sum(axis=0)
                    if i > 0:
                        delta = (delta @ self.weights[i].T) * (caches[i - 1][1] > 0.0)
                    vel_w[i] = momentum * vel_w[i] + grad_w
                    vel_b[i] = momentum * vel_b[i] + grad_b
                    self.weights[i] -= lr * vel_w[i]
                    self.biases[i] -= lr * vel_b[i]
            loss = self.loss(x, y)
            if not np.isfinite(loss):
                raise TrainingDivergedError(epoch)
            trace.append(float(loss))
        return trace

    def loss(self, x: np.ndarray, y: np.ndarray) -> float:
        probs = self.predict_proba(x)
        picked = probs[np.arange(len(y)), np.asarray(y, dtype=int)]
        return float(-np.log(np.clip(picked, 1e-12, None)).mean())

    def predict_proba(self, x: np.ndarray) -> np.ndarray:
        xs = self._standardize(np.asarray(x, dtype=float))
        return softmax(self._forward(xs))

    def predict(self, x: np.ndarray) -> np.ndarray:
        return self.predict_proba(x).argmax(axis=1)

    def to_dict(self) -> dict:
        return {
            "input_dim": self.input_dim,
            "hidden": list(self.hidden),
            "n_classes": self.n_classes,
            "seed": self.seed,
            "weights": [w.tolist() for w in self.weights],
            "biases": [b.tolist() for b in self.biases],
            "feature_mean": self.feature_mean.tolist(),
            "feature_std": self.feature_std.tolist(),
        }

    @classmethod
    def from_dict(cls, data: dict) -> "MLPClassifier":
        model = cls(
            input_dim=data["input_dim"],
            hidden=tuple(data["hidden"]),
            n_classes=data["n_classes"],
            seed=data["seed"],
        )
        model.weights = [np.array(w, dtype=float) for w in data["weights"]]
        model.biases = [np.array(b, dtype=float) for b in data["biases"]]
        model.feature_mean = np.array(data["feature_mean"], dtype=float)
        model.feature_std = np.array(data["feature_std"], dtype=float)
        return model
