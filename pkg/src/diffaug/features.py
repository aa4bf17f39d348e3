"""Feature space for all quality metrics: penultimate activations of a small
classifier trained on the real data."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .data import DataError, LabeledDataset, load_dataset, save_dataset
from .network import MLPClassifier, check_trainable, fit
from .training import TrainConfig

__all__ = ["LabeledDataset", "load_dataset", "save_dataset", "FeatureExtractor", "FeatureSet", "IdentityExtractor",
           "train_feature_extractor", "embed", "save_feature_set", "load_feature_set"]


@dataclass(frozen=True)
class FeatureSet:
    features: np.ndarray
    labels: np.ndarray

    def __post_init__(self):
        F = np.atleast_2d(np.asarray(self.features, dtype=np.float64))
        y = np.asarray(self.labels, dtype=np.int64)
        if y.shape != (F.shape[0],):
            raise DataError("need exactly one label per feature vector")
        if not np.all(np.isfinite(F)):
            raise DataError("features must be finite")
        object.__setattr__(self, "features", F)
        object.__setattr__(self, "labels", y)

    @classmethod
    def unlabeled(cls, features) -> "FeatureSet":
        F = np.atleast_2d(np.asarray(features, dtype=np.float64))
        return cls(F, np.zeros(F.shape[0], dtype=np.int64))

    def __len__(self) -> int:
        return self.features.shape[0]

    @property
    def dim(self) -> int:
        return self.features.shape[1]

    def of_class(self, label: int) -> "FeatureSet":
        mask = self.labels == label
        return FeatureSet(self.features[mask], self.labels[mask])


class FeatureExtractor:
    """Frozen classifier whose last hidden layer defines the embedding."""

    def __init__(self, net: MLPClassifier):
        self.net = net

    @property
    def d(self) -> int:
        return self.net.d

    @property
    def feature_dim(self) -> int:
        return self.net.feature_dim

    def __call__(self, X) -> np.ndarray:
        return self.net.features(X)

    def save(self, path) -> None:
        self.net.save(path)

    @classmethod
    def load(cls, path) -> "FeatureExtractor":
        return cls(MLPClassifier.load(path))


class IdentityExtractor:
    """Treats the input vectors themselves as features (for precomputed feature files)."""

    def __init__(self, d: int):
        self.d = int(d)
        self.feature_dim = self.d

    def __call__(self, X) -> np.ndarray:
        return np.atleast_2d(np.asarray(X, dtype=np.float64))


def train_feature_extractor(real_data: LabeledDataset, config: TrainConfig,
                            hidden=(64,)) -> FeatureExtractor:
    check_trainable(real_data)
    rng = np.random.default_rng(config.seed)
    net = MLPClassifier.initialize(real_data.d, real_data.n_classes, hidden,
                                   seed=rng.integers(2**63))
    fit(net, real_data.X, real_data.y, config, rng)
    return FeatureExtractor(net)


def embed(extractor: FeatureExtractor, data) -> FeatureSet:
    if isinstance(data, LabeledDataset):
        X, y = data.X, data.y
    else:
        X = np.atleast_2d(np.asarray(data, dtype=np.float64))
        y = np.zeros(X.shape[0], dtype=np.int64)
    if X.shape[1] != extractor.d:
        raise ValueError(f"extractor expects dimension {extractor.d}, got {X.shape[1]}")
    return FeatureSet(extractor(X), y)


def save_feature_set(fs: FeatureSet, path) -> None:
    save_dataset(LabeledDataset(fs.features, fs.labels, int(fs.labels.max(initial=-1)) + 1), path)


def load_feature_set(path) -> FeatureSet:
    ds = load_dataset(path)
    return FeatureSet(ds.X, ds.y)

