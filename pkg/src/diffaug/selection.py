"""Realism-score filtering of generated samples and quota top-up."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.spatial.distance import cdist

from .data import LabeledDataset
from .diffusion import sample
from .features import FeatureSet
from .latent import Compressor, decode
from .metrics import ManifoldModel, _as_features, build_manifold

POLICIES = ("none", "realism", "class_realism")
POLICY_ALIASES = {"none": "none", "rs": "realism", "realism": "realism",
                  "class-rs": "class_realism", "class_realism": "class_realism"}


class MaxAttemptsExceeded(RuntimeError):
    """The generator's realistic-sample rate is too low to meet the quota."""

    def __init__(self, label: int, accepted: int, quota: int, attempts: int):
        self.label = label
        self.accepted = accepted
        self.quota = quota
        self.attempts = attempts
        rate = accepted / attempts if attempts else 0.0
        super().__init__(
            f"class {label}: accepted {accepted}/{quota} after {attempts} attempts "
            f"(acceptance rate {rate:.4f}, shortfall {quota - accepted})")

    @property
    def acceptance_rate(self) -> float:
        return self.accepted / self.attempts if self.attempts else 0.0


@dataclass(frozen=True)
class FilterPolicy:
    kind: str = "none"
    k: int = 3
    epsilon: float = 1e-12
    max_attempts_factor: int = 50
    prune_quantile: float | None = None

    def __post_init__(self):
        kind = POLICY_ALIASES.get(self.kind)
        if kind is None:
            raise ValueError(f"unknown filter policy {self.kind!r}")
        object.__setattr__(self, "kind", kind)
        if not self.epsilon > 0:
            raise ValueError("epsilon must be positive")
        if self.max_attempts_factor < 1:
            raise ValueError("max_attempts_factor must be at least 1")
        if self.k < 1:
            raise ValueError("k must be positive")
        if self.prune_quantile is not None and not 0 < self.prune_quantile <= 1:
            raise ValueError("prune_quantile must lie in (0, 1]")


@dataclass
class SyntheticDataset:
    dataset: LabeledDataset
    scores: np.ndarray
    attempts: dict[int, int]
    policy: FilterPolicy
    draw_index: np.ndarray = field(default_factory=lambda: np.zeros(0, dtype=np.int64))

    def __len__(self) -> int:
        return len(self.dataset)


def _pruned(manifold: ManifoldModel, quantile: float | None):
    if quantile is None:
        return manifold.points, manifold.radii
    keep = manifold.radii <= np.quantile(manifold.radii, quantile)
    return manifold.points[keep], manifold.radii[keep]


def realism_scores(phi_g, manifold: ManifoldModel, epsilon: float = 1e-12,
                   prune_quantile: float | None = None) -> np.ndarray:
    """Vectorised realism score for each row of ``phi_g``."""
    points, radii = _pruned(manifold, prune_quantile)
    if points.shape[0] == 0:
        raise ValueError("empty manifold")
    G = _as_features(phi_g)
    if G.shape[1] != points.shape[1]:
        raise ValueError(f"dimension mismatch: {G.shape[1]} vs {points.shape[1]}")
    D = np.maximum(cdist(G, points), epsilon)
    return np.max(radii[None, :] / D, axis=1)


def realism_score(phi_g, manifold: ManifoldModel, epsilon: float = 1e-12) -> float:
    """``max_r radius(r) / max(||phi_g - r||, epsilon)``; ``>= 1`` means inside some hypersphere."""
    phi_g = np.atleast_1d(np.asarray(phi_g, dtype=np.float64))
    return float(realism_scores(phi_g[None, :], manifold, epsilon)[0])


def class_realism_score(phi_g, label: int, class_manifolds: dict, epsilon: float = 1e-12) -> float:
    if label not in class_manifolds:
        raise KeyError(f"no manifold for class {label}")
    return realism_score(phi_g, class_manifolds[label], epsilon)


def build_class_manifolds(real_features: FeatureSet, k: int) -> dict[int, ManifoldModel]:
    return {int(c): build_manifold(real_features.of_class(c), k)
            for c in np.unique(real_features.labels)}


def _batch_seed(seed: int, label: int, batch: int) -> int:
    return int(np.random.SeedSequence([seed, label, batch]).generate_state(1, np.uint64)[0])


def filter_generate(generator, compressor: Compressor, extractor, policy: FilterPolicy,
                    quota: dict, seed: int, real_features: FeatureSet | None = None,
                    manifolds=None) -> SyntheticDataset:
    """Draw, decode, embed, score and keep candidates until every class quota is met.

    ``generator(label, n, seed)`` returns an ``(n, latent_dim)`` array.
    Manifolds come either prebuilt (a single ManifoldModel for ``realism``,
    a class map for ``class_realism``) or from ``real_features``.
    """
    if manifolds is None and real_features is not None:
        manifolds = (build_class_manifolds(real_features, policy.k)
                     if policy.kind == "class_realism" else build_manifold(real_features, policy.k))
    if policy.kind != "none" and manifolds is None:
        raise ValueError("realism policies need real features or prebuilt manifolds")
    xs, ys, scores, draws = [], [], [], []
    attempts = {}
    for label in sorted(quota):
        want = int(quota[label])
        if want < 1:
            raise ValueError(f"quota for class {label} must be positive")
        if policy.kind == "class_realism" and label not in manifolds:
            raise KeyError(f"no manifold for class {label}")
        budget = policy.max_attempts_factor * want
        kept_x, kept_s, kept_i = [], [], []
        used, batch = 0, 0
        while len(kept_x) < want:
            n = min(want - len(kept_x), budget - used)
            if n <= 0:
                raise MaxAttemptsExceeded(label, len(kept_x), want, used)
            latent = np.atleast_2d(generator(label, n, _batch_seed(seed, label, batch)))
            cand = decode(compressor, latent)
            feats = extractor(cand)
            if policy.kind == "none":
                s = (realism_scores(feats, manifolds, policy.epsilon, policy.prune_quantile)
                     if isinstance(manifolds, ManifoldModel) else np.full(n, np.nan))
                ok = np.ones(n, dtype=bool)
            else:
                m = manifolds if policy.kind == "realism" else manifolds[label]
                s = realism_scores(feats, m, policy.epsilon, policy.prune_quantile)
                ok = s >= 1.0
            for j in np.flatnonzero(ok):
                kept_x.append(cand[j])
                kept_s.append(s[j])
                kept_i.append(used + j)
            used += n
            batch += 1
        attempts[label] = used
        xs.extend(kept_x)
        ys.extend([label] * want)
        scores.extend(kept_s)
        draws.extend(kept_i)
    n_classes = max(quota) + 1
    if real_features is not None:
        n_classes = max(n_classes, int(real_features.labels.max()) + 1)
    ds = LabeledDataset(np.array(xs), np.array(ys, dtype=np.int64), n_classes)
    return SyntheticDataset(ds, np.array(scores), attempts, policy,
                            np.array(draws, dtype=np.int64))


def diffusion_generator(denoiser, schedule=None):
    """Adapter turning a trained denoiser into a ``(label, n, seed)`` generator."""
    def generate(label, n, seed):
        return sample(denoiser, int(label), schedule, seed, n)

    return generate

