"""Synthetic labeled datasets for demos and tests."""

from __future__ import annotations

import numpy as np

from .data import LabeledDataset


def gaussian_mixture(n_per_class, means, std=1.0, seed=0) -> LabeledDataset:
    """Isotropic Gaussian blob per class, samples interleaved in random order."""
    means = np.atleast_2d(np.asarray(means, dtype=np.float64))
    counts = np.broadcast_to(np.asarray(n_per_class), (means.shape[0],))
    rng = np.random.default_rng(seed)
    X = np.vstack([m + std * rng.standard_normal((int(c), means.shape[1]))
                   for m, c in zip(means, counts)])
    y = np.repeat(np.arange(means.shape[0]), counts)
    order = rng.permutation(len(y))
    return LabeledDataset(X[order], y[order], means.shape[0])


TOY_MEANS = ((-2.0, 0.0), (2.0, 0.0))


def toy_splits(seed=0, n_train=2000, n_valid=500, n_test=500, means=TOY_MEANS, std=1.0):
    """Balanced train/valid/test draws from the same two-class mixture."""
    k = len(means)
    return tuple(gaussian_mixture(n // k, means, std, seed=seed * 3 + j)
                 for j, n in enumerate((n_train, n_valid, n_test)))
