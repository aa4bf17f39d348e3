"""Small fully connected softmax classifier shared by feature extraction and
the downstream harness."""

from __future__ import annotations

import json

import numpy as np
from scipy.special import log_softmax, softmax

from .training import Optimizer, TrainConfig, glorot_uniform, minibatches

FORMAT_TAG = "diffaug-mlp"


class MLPClassifier:
    """``x -> tanh(W0 x + b0) -> ... -> softmax(W_out h + b_out)``."""

    def __init__(self, d: int, n_classes: int, hidden=(64,), params=None):
        self.d = int(d)
        self.n_classes = int(n_classes)
        self.hidden = tuple(int(h) for h in hidden)
        widths = (self.d,) + self.hidden + (self.n_classes,)
        self._shapes = []
        for i in range(len(widths) - 1):
            self._shapes.append((f"W{i}", (widths[i + 1], widths[i])))
            self._shapes.append((f"b{i}", (widths[i + 1],)))
        self.n_layers = len(widths) - 1
        size = sum(int(np.prod(s)) for _, s in self._shapes)
        params = np.zeros(size) if params is None else np.array(params, dtype=np.float64).ravel()
        if params.size != size:
            raise ValueError(f"expected {size} parameters, got {params.size}")
        self.params = params

    @property
    def feature_dim(self) -> int:
        return self.hidden[-1] if self.hidden else self.d

    def _unflatten(self, flat):
        out, offset = {}, 0
        for name, shape in self._shapes:
            n = int(np.prod(shape))
            out[name] = flat[offset:offset + n].reshape(shape)
            offset += n
        return out

    @property
    def views(self):
        return self._unflatten(self.params)

    @classmethod
    def initialize(cls, d, n_classes, hidden=(64,), seed=0) -> "MLPClassifier":
        net = cls(d, n_classes, hidden)
        rng = np.random.default_rng(seed)
        for name, arr in net.views.items():
            if name.startswith("W"):
                arr[...] = glorot_uniform(rng, arr.shape[1], arr.shape[0])
        return net

    def copy(self) -> "MLPClassifier":
        return type(self)(self.d, self.n_classes, self.hidden, self.params.copy())

    def _check(self, X):
        X = np.atleast_2d(np.asarray(X, dtype=np.float64))
        if X.shape[1] != self.d:
            raise ValueError(f"expected input dimension {self.d}, got {X.shape[1]}")
        return X

    def _forward(self, X):
        p = self.views
        hs = [X]
        h = X
        for i in range(self.n_layers - 1):
            h = np.tanh(h @ p[f"W{i}"].T + p[f"b{i}"])
            hs.append(h)
        last = self.n_layers - 1
        return h @ p[f"W{last}"].T + p[f"b{last}"], hs

    def features(self, X) -> np.ndarray:
        """Penultimate-layer activations."""
        _, hs = self._forward(self._check(X))
        return hs[-1]

    def logits(self, X) -> np.ndarray:
        return self._forward(self._check(X))[0]

    def predict_proba(self, X) -> np.ndarray:
        return softmax(self.logits(X), axis=1)

    def predict(self, X) -> np.ndarray:
        return np.argmax(self.logits(X), axis=1)

    def loss_and_grad(self, X, y):
        """Mean cross-entropy and its gradient."""
        X = self._check(X)
        n = X.shape[0]
        logits, hs = self._forward(X)
        logp = log_softmax(logits, axis=1)
        loss = float(-logp[np.arange(n), y].mean())
        dz = np.exp(logp)
        dz[np.arange(n), y] -= 1.0
        dz /= n
        grad = np.zeros_like(self.params)
        g = self._unflatten(grad)
        p = self.views
        for i in range(self.n_layers - 1, -1, -1):
            g[f"W{i}"][...] = dz.T @ hs[i]
            g[f"b{i}"][...] = dz.sum(axis=0)
            if i > 0:
                dz = (dz @ p[f"W{i}"]) * (1.0 - hs[i] ** 2)
        return loss, grad

    def mean_loss(self, X, y) -> float:
        logp = log_softmax(self.logits(X), axis=1)
        return float(-logp[np.arange(len(y)), y].mean())

    def to_dict(self) -> dict:
        return {"format": FORMAT_TAG, "version": 1,
                "meta": {"d": self.d, "n_classes": self.n_classes, "hidden": list(self.hidden)},
                "params": {k: v.tolist() for k, v in self.views.items()}}

    @classmethod
    def from_dict(cls, doc: dict):
        if doc.get("format") != FORMAT_TAG:
            raise ValueError("not a classifier document")
        meta = doc["meta"]
        net = cls(meta["d"], meta["n_classes"], tuple(meta["hidden"]))
        for name, arr in net.views.items():
            value = np.asarray(doc["params"][name], dtype=np.float64)
            if value.shape != arr.shape:
                raise ValueError(f"parameter {name}: expected shape {arr.shape}, got {value.shape}")
            arr[...] = value
        return net

    def save(self, path) -> None:
        with open(path, "w") as fh:
            json.dump(self.to_dict(), fh, indent=1)
            fh.write("\n")

    @classmethod
    def load(cls, path):
        with open(path) as fh:
            return cls.from_dict(json.load(fh))


def check_trainable(dataset) -> None:
    counts = dataset.class_counts
    if len(counts) < 2 or np.count_nonzero(counts) < 2:
        raise ValueError("classifier training needs at least two non-empty classes")
    if np.any(counts == 0):
        raise ValueError(f"empty classes: {np.flatnonzero(counts == 0).tolist()}")


def fit(net: MLPClassifier, X, y, config: TrainConfig, rng: np.random.Generator,
        epochs: int | None = None, jitter: np.ndarray | None = None, on_epoch=None):
    """Cross-entropy mini-batch training in place; ``on_epoch(epoch, net)`` after each epoch.

    ``jitter`` is a per-feature noise scale added to every mini-batch.
    """
    opt = Optimizer(net.params, config)
    trace = []
    for epoch in range(epochs or config.epochs):
        total = 0.0
        for idx in minibatches(len(y), config.batch_size, rng):
            xb = X[idx]
            if jitter is not None:
                xb = xb + rng.standard_normal(xb.shape) * jitter
            loss, grad = net.loss_and_grad(xb, y[idx])
            opt.step(grad)
            total += loss * len(idx)
        trace.append(total / len(y))
        if not np.isfinite(trace[-1]):
            raise FloatingPointError(f"training diverged at epoch {epoch}")
        if on_epoch is not None:
            on_epoch(epoch, net)
    return trace
