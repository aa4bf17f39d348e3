"""Discrete-time noise schedules for the denoising diffusion engine.

Arrays are indexed by timestep ``t = 0 .. T-1``; index ``T-1`` is the
noisiest step and ``alpha_bars[t]`` is the cumulative signal fraction
after applying steps ``0..t``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

MAX_BETA = 0.999


@dataclass(frozen=True)
class NoiseSchedule:
    """Precomputed beta/alpha/alpha-bar/sigma arrays over ``T`` steps."""

    T: int
    betas: np.ndarray
    alphas: np.ndarray
    alpha_bars: np.ndarray
    sigmas: np.ndarray
    kind: str = "custom"
    params: tuple = ()

    @classmethod
    def from_betas(cls, betas, kind: str = "custom", params: tuple = ()) -> "NoiseSchedule":
        betas = np.asarray(betas, dtype=np.float64).copy()
        if betas.ndim != 1 or betas.size < 1:
            raise ValueError("betas must be a non-empty 1-D sequence")
        if not np.all((betas > 0) & (betas < 1)):
            raise ValueError("every beta must lie in (0, 1)")
        alphas = 1.0 - betas
        alpha_bars = np.cumprod(alphas)
        sigmas = np.sqrt(betas)
        for arr in (betas, alphas, alpha_bars, sigmas):
            arr.setflags(write=False)
        return cls(int(betas.size), betas, alphas, alpha_bars, sigmas, kind, tuple(params))

    def check_t(self, t) -> np.ndarray:
        t = np.asarray(t)
        if not np.issubdtype(t.dtype, np.integer):
            raise TypeError("timesteps must be integers")
        if np.any(t < 0) or np.any(t >= self.T):
            raise ValueError(f"timestep out of range [0, {self.T})")
        return t

    def to_dict(self) -> dict:
        if self.kind == "cosine":
            return {"kind": "cosine", "T": self.T, "s": self.params[0]}
        if self.kind == "linear":
            return {"kind": "linear", "T": self.T,
                    "beta_start": self.params[0], "beta_end": self.params[1]}
        return {"kind": "custom", "betas": self.betas.tolist()}


def schedule_from_dict(spec: dict) -> NoiseSchedule:
    kind = spec.get("kind", "cosine")
    if kind == "cosine":
        return make_cosine_schedule(int(spec["T"]), float(spec.get("s", 0.008)))
    if kind == "linear":
        return make_linear_schedule(int(spec["T"]), float(spec["beta_start"]),
                                    float(spec["beta_end"]))
    if kind == "custom":
        return NoiseSchedule.from_betas(spec["betas"])
    raise ValueError(f"unknown schedule kind {kind!r}")


def _cosine_f(t, T: int, s: float):
    return np.cos(((t / T + s) / (1.0 + s)) * (math.pi / 2)) ** 2


def make_cosine_schedule(T: int = 200, s: float = 0.008) -> NoiseSchedule:
    """Cosine schedule: ``alpha_bar(t) = f(t) / f(0)`` with betas clipped at 0.999.

    Step ``i`` carries the ratio ``f(i+1) / f(i)``, so ``alpha_bars[T-1]``
    sits at the terminal point ``t = T`` of the continuous curve.
    """
    if int(T) != T or T < 2:
        raise ValueError(f"cosine schedule needs T >= 2, got {T}")
    if not 0.0 < s < 1.0:
        raise ValueError(f"offset s must lie in (0, 1), got {s}")
    T = int(T)
    f = _cosine_f(np.arange(T + 1, dtype=np.float64), T, s)
    ratio_bars = f / f[0]
    betas = 1.0 - ratio_bars[1:] / ratio_bars[:-1]
    betas = np.clip(betas, np.finfo(np.float64).tiny, MAX_BETA)
    return NoiseSchedule.from_betas(betas, "cosine", (float(s),))


def make_linear_schedule(T: int, beta_start: float, beta_end: float) -> NoiseSchedule:
    if int(T) != T or T < 1:
        raise ValueError(f"T must be a positive integer, got {T}")
    if not 0.0 < beta_start <= beta_end < 1.0:
        raise ValueError(
            f"need 0 < beta_start <= beta_end < 1, got {beta_start}, {beta_end}")
    betas = np.linspace(beta_start, beta_end, int(T), dtype=np.float64)
    return NoiseSchedule.from_betas(betas, "linear", (float(beta_start), float(beta_end)))
