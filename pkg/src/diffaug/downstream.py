"""Downstream classification harness: subset protocol, training regimes and
classifier metrics."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.stats import rankdata

from .data import LabeledDataset
from .network import MLPClassifier, check_trainable, fit
from .training import TrainConfig

Classifier = MLPClassifier

REGIMES = ("baseline", "traditional_aug", "synthetic_aug", "transfer")


def split_subsets(dataset: LabeledDataset, n_subsets: int, fraction: float,
                  seed: int = 0) -> list[LabeledDataset]:
    """Disjoint class-stratified subsets, each holding ``fraction`` of the data."""
    if n_subsets < 1:
        raise ValueError("n_subsets must be positive")
    if not 0 < fraction <= 1 or n_subsets * fraction > 1 + 1e-12:
        raise ValueError(f"infeasible split: {n_subsets} x {fraction} exceeds the dataset")
    rng = np.random.default_rng(seed)
    parts = [[] for _ in range(n_subsets)]
    for c in range(dataset.n_classes):
        idx = np.flatnonzero(dataset.y == c)
        if idx.size == 0:
            continue
        per = int(round(fraction * idx.size))
        if per * n_subsets > idx.size:
            per = idx.size // n_subsets
        if per == 0:
            raise ValueError(f"class {c} has too few samples ({idx.size}) for the split")
        idx = rng.permutation(idx)
        for i in range(n_subsets):
            parts[i].append(idx[i * per:(i + 1) * per])
    return [dataset.subset(np.sort(np.concatenate(p))) for p in parts]


def auc(scores, labels) -> float:
    """Rank-statistic ROC AUC with ties counted as one half."""
    scores = np.asarray(scores, dtype=np.float64)
    labels = np.asarray(labels)
    pos = labels == 1
    n_pos = int(pos.sum())
    n_neg = labels.size - n_pos
    if n_pos == 0 or n_neg == 0:
        raise ValueError("AUC needs both classes present")
    ranks = rankdata(scores)
    u = ranks[pos].sum() - n_pos * (n_pos + 1) / 2.0
    return float(u / (n_pos * n_neg))


@dataclass(frozen=True)
class ClassifierMetrics:
    accuracy: float
    auc: float
    sensitivity: float
    specificity: float

    def to_dict(self) -> dict:
        return {"accuracy": self.accuracy, "auc": self.auc,
                "sensitivity": self.sensitivity, "specificity": self.specificity}


def binary_metrics(p_positive, labels) -> ClassifierMetrics:
    """Metrics from class-1 probabilities thresholded at 0.5."""
    p = np.asarray(p_positive, dtype=np.float64)
    labels = np.asarray(labels)
    if labels.size == 0:
        raise ValueError("empty test set")
    pred = (p >= 0.5).astype(np.int64)
    tp = int(np.sum((pred == 1) & (labels == 1)))
    fn = int(np.sum((pred == 0) & (labels == 1)))
    tn = int(np.sum((pred == 0) & (labels == 0)))
    fp = int(np.sum((pred == 1) & (labels == 0)))
    sens = tp / (tp + fn) if tp + fn else float("nan")
    spec = tn / (tn + fp) if tn + fp else float("nan")
    area = auc(p, labels) if 0 < tp + fn < labels.size else float("nan")
    return ClassifierMetrics((tp + tn) / labels.size, area, sens, spec)


def evaluate(classifier, test: LabeledDataset) -> ClassifierMetrics:
    """Accuracy at argmax; AUC, sensitivity and specificity on the class-1 probability.

    The binary-only metrics are NaN when the classifier has more than two classes.
    """
    if len(test) == 0:
        raise ValueError("empty test set")
    proba = classifier.predict_proba(test.X)
    accuracy = float(np.mean(np.argmax(proba, axis=1) == test.y))
    if proba.shape[1] != 2:
        nan = float("nan")
        return ClassifierMetrics(accuracy, nan, nan, nan)
    m = binary_metrics(proba[:, 1], test.y)
    return ClassifierMetrics(accuracy, m.auc, m.sensitivity, m.specificity)


def _selection_score(net, valid: LabeledDataset) -> float:
    m = evaluate(net, valid)
    return m.accuracy if np.isnan(m.auc) else m.auc


def train_classifier(train: LabeledDataset, config: TrainConfig, init=None,
                     valid: LabeledDataset | None = None, jitter=None,
                     hidden=(64,)) -> MLPClassifier:
    """Cross-entropy training, optionally warm-started from ``init``.

    With ``valid`` the parameters from the epoch with the best validation
    AUC are returned; otherwise the final ones.
    """
    check_trainable(train)
    rng = np.random.default_rng(config.seed)
    init_seed = rng.integers(2**63)
    if init is not None:
        if init.d != train.d or init.n_classes != train.n_classes:
            raise ValueError(
                f"init expects d={init.d}, C={init.n_classes}; data has d={train.d}, "
                f"C={train.n_classes}")
        net = init.copy()
    else:
        net = MLPClassifier.initialize(train.d, train.n_classes, hidden, seed=init_seed)
    if valid is None:
        fit(net, train.X, train.y, config, rng, jitter=jitter)
        return net
    best = {"score": -np.inf, "params": net.params.copy()}

    def track(epoch, current):
        score = _selection_score(current, valid)
        if score > best["score"]:
            best["score"] = score
            best["params"] = current.params.copy()

    fit(net, train.X, train.y, config, rng, jitter=jitter, on_epoch=track)
    net.params[...] = best["params"]
    return net


@dataclass(frozen=True)
class Regime:
    kind: str = "baseline"
    noise_scale: float = 0.05
    equal_amounts: bool = True

    def __post_init__(self):
        if self.kind not in REGIMES:
            raise ValueError(f"unknown regime {self.kind!r}")

    @property
    def needs_synthetic(self) -> bool:
        return self.kind in ("synthetic_aug", "transfer")


def run_regime(regime: Regime, real_train: LabeledDataset, synth, valid: LabeledDataset,
               test: LabeledDataset, config: TrainConfig, hidden=(64,)) -> ClassifierMetrics:
    """Train under one regime, select by validation AUC, report test metrics."""
    synth_ds = getattr(synth, "dataset", synth)
    if regime.needs_synthetic:
        if synth_ds is None:
            raise ValueError(f"regime {regime.kind!r} needs a synthetic dataset")
        if regime.equal_amounts and len(synth_ds) != len(real_train):
            raise ValueError(
                f"synthetic set has {len(synth_ds)} samples, real set {len(real_train)}")
        synth_ds = LabeledDataset(synth_ds.X, synth_ds.y, real_train.n_classes)
    if regime.kind == "baseline":
        net = train_classifier(real_train, config, valid=valid, hidden=hidden)
    elif regime.kind == "traditional_aug":
        jitter = regime.noise_scale * real_train.X.std(axis=0)
        net = train_classifier(real_train, config, valid=valid, jitter=jitter, hidden=hidden)
    elif regime.kind == "synthetic_aug":
        net = train_classifier(real_train.concat(synth_ds), config, valid=valid, hidden=hidden)
    else:
        pre = train_classifier(synth_ds, config, hidden=hidden)
        net = train_classifier(real_train, config, init=pre, valid=valid, hidden=hidden)
    return evaluate(net, test)
