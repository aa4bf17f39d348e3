"""Shared optimisation plumbing: training configuration and optimisers."""

from __future__ import annotations

from dataclasses import asdict, dataclass, field, fields

import numpy as np


@dataclass(frozen=True)
class TrainConfig:
    """Hyperparameters for any of the gradient-trained models.

    The schedule and architecture fields are read only by the diffusion
    trainer; classifiers ignore them.
    """

    epochs: int = 100
    batch_size: int = 64
    learning_rate: float = 1e-3
    seed: int = 0
    optimizer: str = "momentum"
    momentum: float = 0.9
    grad_clip: float | None = None
    hidden: tuple[int, ...] = (128, 128)
    embedding_dim: int = 32
    schedule: dict = field(default_factory=lambda: {"kind": "cosine", "T": 200, "s": 0.008})

    def __post_init__(self):
        if self.epochs < 1 or self.batch_size < 1:
            raise ValueError("epochs and batch_size must be positive")
        if not self.learning_rate > 0:
            raise ValueError("learning_rate must be positive")
        if self.optimizer not in ("momentum", "adam"):
            raise ValueError(f"unknown optimizer {self.optimizer!r}")
        if not 0 <= self.momentum < 1:
            raise ValueError("momentum must lie in [0, 1)")
        object.__setattr__(self, "hidden", tuple(int(h) for h in self.hidden))

    def replace(self, **changes) -> "TrainConfig":
        values = asdict(self)
        values.update(changes)
        return TrainConfig(**values)

    @classmethod
    def from_dict(cls, data: dict | None) -> "TrainConfig":
        data = dict(data or {})
        known = {f.name for f in fields(cls)}
        unknown = set(data) - known
        if unknown:
            raise ValueError(f"unknown training options: {sorted(unknown)}")
        if "hidden" in data:
            data["hidden"] = tuple(data["hidden"])
        return cls(**data)

    def to_dict(self) -> dict:
        d = asdict(self)
        d["hidden"] = list(self.hidden)
        return d


class Optimizer:
    """Momentum SGD or Adam acting in place on a flat parameter vector."""

    def __init__(self, params: np.ndarray, config: TrainConfig):
        self.params = params
        self.config = config
        self.velocity = np.zeros_like(params)
        self.second = np.zeros_like(params) if config.optimizer == "adam" else None
        self.steps = 0

    def step(self, grad: np.ndarray) -> None:
        cfg = self.config
        if cfg.grad_clip is not None:
            norm = float(np.linalg.norm(grad))
            if norm > cfg.grad_clip:
                grad = grad * (cfg.grad_clip / norm)
        self.steps += 1
        if cfg.optimizer == "momentum":
            self.velocity *= cfg.momentum
            self.velocity -= cfg.learning_rate * grad
            self.params += self.velocity
            return
        b1, b2, eps = 0.9, 0.999, 1e-8
        self.velocity *= b1
        self.velocity += (1 - b1) * grad
        self.second *= b2
        self.second += (1 - b2) * grad * grad
        m_hat = self.velocity / (1 - b1 ** self.steps)
        v_hat = self.second / (1 - b2 ** self.steps)
        self.params -= cfg.learning_rate * m_hat / (np.sqrt(v_hat) + eps)


def minibatches(n: int, batch_size: int, rng: np.random.Generator):
    order = rng.permutation(n)
    for start in range(0, n, batch_size):
        yield order[start:start + batch_size]


def glorot_uniform(rng: np.random.Generator, fan_in: int, fan_out: int) -> np.ndarray:
    a = np.sqrt(6.0 / (fan_in + fan_out))
    return rng.uniform(-a, a, size=(fan_out, fan_in))
