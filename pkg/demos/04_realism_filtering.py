"""Realism scores and filtered generation with a deliberately noisy generator."""

import numpy as np

from diffaug import Compressor, FeatureSet, FilterPolicy, build_manifold, filter_generate, realism_score

# Hand-checkable case: reference points {0, 1, 3} with k=1 have radii {1, 1, 2}.
m = build_manifold(np.array([[0.0], [1.0], [3.0]]), k=1)
print("radii", m.radii, "R(2) =", realism_score([2.0], m), "R(6) =", round(realism_score([6.0], m), 4))

rng = np.random.default_rng(0)
real = FeatureSet(np.vstack([rng.normal(size=(200, 2)) - 3, rng.normal(size=(200, 2)) + 3]),
                  np.repeat([0, 1], 200))


def sloppy(label, n, seed):
    # Right centre, three times too wide.
    return 3.0 * np.random.default_rng(seed).normal(size=(n, 2)) + (6 * label - 3)


for kind in ("none", "realism", "class_realism"):
    out = filter_generate(sloppy, Compressor.identity(2), lambda X: X, FilterPolicy(kind),
                          {0: 100, 1: 100}, seed=1, real_features=real)
    spread = np.mean([out.dataset.X[out.dataset.y == c].std(0).mean() for c in (0, 1)])
    print(f"{kind:14s} attempts {out.attempts}  min score {out.scores.min():.3f}  "
          f"per-class std {spread:.2f}")
