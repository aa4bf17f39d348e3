"""Class-conditional denoising diffusion on vectors.

The noise predictor is a small fully connected network.  The timestep goes
through a fixed sinusoidal embedding, the label through a learned table;
the two are summed, linearly projected and added to the first hidden
layer's pre-activation.  Gradients are derived by hand so the whole engine
runs in float64 numpy.
"""

from __future__ import annotations

import json
import logging
import math

import numpy as np
from scipy.special import expit

from .schedule import NoiseSchedule, schedule_from_dict
from .training import Optimizer, TrainConfig, glorot_uniform, minibatches

logger = logging.getLogger(__name__)

FORMAT_TAG = "diffaug-denoiser"


def timestep_embedding(t, dim: int) -> np.ndarray:
    """Sinusoidal embedding, ``dim // 2`` sines followed by matching cosines."""
    t = np.atleast_1d(np.asarray(t, dtype=np.float64))
    half = dim // 2
    freqs = np.exp(-math.log(10000.0) * np.arange(half) / max(half, 1))
    angles = t[:, None] * freqs[None, :]
    return np.concatenate([np.sin(angles), np.cos(angles)], axis=1)


def _silu(a):
    s = expit(a)
    return a * s, s


class Denoiser:
    """Noise predictor ``eps_theta(x_t, t, label)`` over a flat parameter vector."""

    def __init__(self, d: int, n_classes: int, hidden=(128, 128), embedding_dim: int = 32,
                 params: np.ndarray | None = None, schedule: NoiseSchedule | None = None):
        if d < 1 or n_classes < 1 or not hidden:
            raise ValueError("need d >= 1, n_classes >= 1 and at least one hidden layer")
        if embedding_dim < 2 or embedding_dim % 2:
            raise ValueError("embedding_dim must be an even integer >= 2")
        self.d = int(d)
        self.n_classes = int(n_classes)
        self.hidden = tuple(int(h) for h in hidden)
        self.embedding_dim = int(embedding_dim)
        self.schedule = schedule
        self.loss_trace: list[float] = []

        widths = (self.d,) + self.hidden + (self.d,)
        shapes = [("label_table", (self.n_classes, self.embedding_dim)),
                  ("W_emb", (self.hidden[0], self.embedding_dim))]
        for i in range(len(widths) - 1):
            shapes.append((f"W{i}", (widths[i + 1], widths[i])))
            shapes.append((f"b{i}", (widths[i + 1],)))
        self._shapes = shapes
        size = sum(int(np.prod(s)) for _, s in shapes)
        if params is None:
            params = np.zeros(size)
        params = np.array(params, dtype=np.float64).ravel()
        if params.size != size:
            raise ValueError(f"expected {size} parameters, got {params.size}")
        self.params = params
        self.n_layers = len(widths) - 1

    @property
    def views(self) -> dict[str, np.ndarray]:
        out, offset = {}, 0
        for name, shape in self._shapes:
            n = int(np.prod(shape))
            out[name] = self.params[offset:offset + n].reshape(shape)
            offset += n
        return out

    def _unflatten(self, flat):
        out, offset = {}, 0
        for name, shape in self._shapes:
            n = int(np.prod(shape))
            out[name] = flat[offset:offset + n].reshape(shape)
            offset += n
        return out

    @classmethod
    def initialize(cls, d, n_classes, hidden=(128, 128), embedding_dim=32, seed=0,
                   schedule=None) -> "Denoiser":
        net = cls(d, n_classes, hidden, embedding_dim, schedule=schedule)
        rng = np.random.default_rng(seed)
        for name, arr in net.views.items():
            if name.startswith("b"):
                continue
            fan_out, fan_in = arr.shape if name != "label_table" else arr.shape[::-1]
            w = glorot_uniform(rng, fan_in, fan_out)
            arr[...] = w if name != "label_table" else w.T
        return net

    def copy(self) -> "Denoiser":
        other = Denoiser(self.d, self.n_classes, self.hidden, self.embedding_dim,
                         self.params.copy(), self.schedule)
        other.loss_trace = list(self.loss_trace)
        return other

    def _check_inputs(self, x, t, labels):
        x = np.asarray(x, dtype=np.float64)
        single = x.ndim == 1
        x = np.atleast_2d(x)
        if x.shape[1] != self.d:
            raise ValueError(f"expected dimension {self.d}, got {x.shape[1]}")
        n = x.shape[0]
        t = np.broadcast_to(np.asarray(t), (n,))
        labels = np.broadcast_to(np.asarray(labels), (n,))
        if not np.issubdtype(labels.dtype, np.integer):
            raise TypeError("labels must be integers")
        if np.any(labels < 0) or np.any(labels >= self.n_classes):
            raise ValueError(f"label out of range [0, {self.n_classes})")
        if np.any(t < 0):
            raise ValueError("negative timestep")
        return x, t, labels, single

    def forward(self, x, t, labels):
        """Batch evaluation; returns ``(eps_hat, cache)`` for :meth:`backward`."""
        x, t, labels, _ = self._check_inputs(x, t, labels)
        p = self.views
        emb = timestep_embedding(t, self.embedding_dim) + p["label_table"][labels]
        h = x
        acts = []
        for i in range(self.n_layers):
            a = h @ p[f"W{i}"].T + p[f"b{i}"]
            if i == 0:
                a = a + emb @ p["W_emb"].T
            if i == self.n_layers - 1:
                return a, (x, labels, emb, acts)
            inp = h
            h, s = _silu(a)
            acts.append((inp, a, s))
        raise AssertionError("unreachable")

    def backward(self, cache, dout: np.ndarray) -> np.ndarray:
        """Flat gradient of ``sum(dout * eps_hat)`` with respect to the parameters."""
        x, labels, emb, acts = cache
        p = self.views
        grad = np.zeros_like(self.params)
        g = self._unflatten(grad)
        last = self.n_layers - 1
        h_last = acts[-1]
        h_out = h_last[1] * h_last[2]
        g[f"W{last}"][...] = dout.T @ h_out
        g[f"b{last}"][...] = dout.sum(axis=0)
        dh = dout @ p[f"W{last}"]
        for i in range(last - 1, -1, -1):
            inp, a, s = acts[i]
            da = dh * (s * (1.0 + a * (1.0 - s)))
            g[f"W{i}"][...] = da.T @ inp
            g[f"b{i}"][...] = da.sum(axis=0)
            if i == 0:
                g["W_emb"][...] = da.T @ emb
                demb = da @ p["W_emb"]
                np.add.at(g["label_table"], labels, demb)
            else:
                dh = da @ p[f"W{i}"]
        return grad

    def __call__(self, x, t, labels):
        out, _ = self.forward(x, t, labels)
        return out[0] if np.asarray(x).ndim == 1 else out

    def to_dict(self) -> dict:
        meta = {"d": self.d, "n_classes": self.n_classes, "hidden": list(self.hidden),
                "embedding_dim": self.embedding_dim,
                "schedule": self.schedule.to_dict() if self.schedule is not None else None}
        return {"format": FORMAT_TAG, "version": 1, "meta": meta,
                "params": {k: v.tolist() for k, v in self.views.items()},
                "loss_trace": list(self.loss_trace)}

    @classmethod
    def from_dict(cls, doc: dict) -> "Denoiser":
        if doc.get("format") != FORMAT_TAG:
            raise ValueError("not a denoiser document")
        meta = doc["meta"]
        sched = schedule_from_dict(meta["schedule"]) if meta.get("schedule") else None
        net = cls(meta["d"], meta["n_classes"], tuple(meta["hidden"]), meta["embedding_dim"],
                  schedule=sched)
        for name, arr in net.views.items():
            value = np.asarray(doc["params"][name], dtype=np.float64)
            if value.shape != arr.shape:
                raise ValueError(f"parameter {name}: expected shape {arr.shape}, got {value.shape}")
            arr[...] = value
        net.loss_trace = [float(v) for v in doc.get("loss_trace", [])]
        return net


def save_denoiser(net: Denoiser, path, extra_meta: dict | None = None) -> None:
    doc = net.to_dict()
    if extra_meta:
        doc["meta"].update(extra_meta)
    with open(path, "w") as fh:
        json.dump(doc, fh, indent=1)
        fh.write("\n")


def load_denoiser(path) -> Denoiser:
    with open(path) as fh:
        return Denoiser.from_dict(json.load(fh))


def forward_sample(x0, t, eps, schedule: NoiseSchedule) -> np.ndarray:
    """Noised sample ``sqrt(abar_t) x0 + sqrt(1 - abar_t) eps``; ``t`` may be per-row."""
    x0 = np.asarray(x0, dtype=np.float64)
    eps = np.asarray(eps, dtype=np.float64)
    if x0.shape != eps.shape:
        raise ValueError(f"shape mismatch: x0 {x0.shape} vs eps {eps.shape}")
    t = schedule.check_t(t)
    abar = schedule.alpha_bars[t]
    if abar.ndim == 1 and x0.ndim == 2:
        abar = abar[:, None]
    return np.sqrt(abar) * x0 + np.sqrt(1.0 - abar) * eps


def predict_noise(denoiser: Denoiser, x_t, t, label) -> np.ndarray:
    return denoiser(x_t, t, label)


def reverse_step(x_t, t, eps_hat, z, schedule: NoiseSchedule) -> np.ndarray:
    """One ancestral step ``t -> t-1`` with ``sigma_t = sqrt(beta_t)``."""
    x_t = np.asarray(x_t, dtype=np.float64)
    eps_hat = np.asarray(eps_hat, dtype=np.float64)
    z = np.asarray(z, dtype=np.float64)
    if x_t.shape != eps_hat.shape or x_t.shape != z.shape:
        raise ValueError("x_t, eps_hat and z must share a shape")
    if int(t) != t or not 1 <= t < schedule.T:
        raise ValueError(f"reverse step needs t in [1, {schedule.T}), got {t}")
    t = int(t)
    beta, alpha, abar = schedule.betas[t], schedule.alphas[t], schedule.alpha_bars[t]
    mean = (x_t - (beta / np.sqrt(1.0 - abar)) * eps_hat) / np.sqrt(alpha)
    return mean + schedule.sigmas[t] * z


def sample(denoiser: Denoiser, label, schedule: NoiseSchedule | None = None,
           rng_seed=0, n: int = 1) -> np.ndarray:
    """Draw ``n`` samples for ``label`` (an int or a length-``n`` array) as an ``(n, d)`` array."""
    if n < 1:
        raise ValueError("n must be at least 1")
    schedule = schedule or denoiser.schedule
    if schedule is None:
        raise ValueError("no noise schedule supplied")
    rng = np.random.default_rng(rng_seed)
    labels = np.broadcast_to(np.asarray(label, dtype=np.int64), (n,))
    x = rng.standard_normal((n, denoiser.d))
    for t in range(schedule.T - 1, 0, -1):
        eps_hat, _ = denoiser.forward(x, np.full(n, t), labels)
        z = rng.standard_normal(x.shape) if t > 1 else np.zeros_like(x)
        x = reverse_step(x, t, eps_hat, z, schedule)
    return x


def draw_training_noise(n: int, d: int, T: int, rng):
    """Per-example timesteps and noise exactly as :func:`simple_loss` draws them."""
    rng = np.random.default_rng(rng)
    t = rng.integers(0, T, size=n)
    eps = rng.standard_normal((n, d))
    return t, eps


def simple_loss(denoiser, x0, labels, schedule: NoiseSchedule, rng_seed=0):
    """Batch-mean ``||eps - eps_theta(x_t, t, label)||^2`` and its exact gradient."""
    x0 = np.atleast_2d(np.asarray(x0, dtype=np.float64))
    if x0.shape[0] == 0:
        raise ValueError("empty batch")
    labels = np.asarray(labels, dtype=np.int64)
    n = x0.shape[0]
    t, eps = draw_training_noise(n, x0.shape[1], schedule.T, rng_seed)
    x_t = forward_sample(x0, t, eps, schedule)
    pred, cache = denoiser.forward(x_t, t, labels)
    resid = pred - eps
    loss = float(np.sum(resid * resid) / n)
    grad = denoiser.backward(cache, (2.0 / n) * resid)
    return loss, grad


def train(dataset, config: TrainConfig, schedule: NoiseSchedule | None = None,
          init: Denoiser | None = None) -> Denoiser:
    """Mini-batch training on the simplified loss; the loss trace is kept on the result."""
    if len(dataset) == 0:
        raise ValueError("empty dataset")
    counts = dataset.class_counts
    if np.any(counts == 0):
        missing = np.flatnonzero(counts == 0).tolist()
        raise ValueError(f"classes with no samples: {missing}")
    schedule = schedule or schedule_from_dict(config.schedule)
    rng = np.random.default_rng(config.seed)
    if init is None:
        net = Denoiser.initialize(dataset.d, dataset.n_classes, config.hidden,
                                  config.embedding_dim, seed=rng.integers(2**63),
                                  schedule=schedule)
    else:
        net = init.copy()
        net.schedule = schedule
    opt = Optimizer(net.params, config)
    trace = []
    for epoch in range(config.epochs):
        total, count = 0.0, 0
        for idx in minibatches(len(dataset), config.batch_size, rng):
            loss, grad = simple_loss(net, dataset.X[idx], dataset.y[idx], schedule, rng)
            opt.step(grad)
            total += loss * len(idx)
            count += len(idx)
        trace.append(total / count)
        if not np.isfinite(trace[-1]):
            raise FloatingPointError(f"training diverged at epoch {epoch}")
        if epoch % 100 == 0:
            logger.debug("epoch %d loss %.5f", epoch, trace[-1])
    net.loss_trace = trace
    return net
