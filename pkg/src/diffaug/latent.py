"""Encoder/decoder pair between data space and a compact latent space."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np


@dataclass(frozen=True)
class Compressor:
    """Identity or affine-linear compressor.

    The linear kind encodes ``E (x - offset)`` and decodes ``D z + offset``.
    """

    kind: str
    d: int
    latent_dim: int
    encode_matrix: np.ndarray | None = None
    decode_matrix: np.ndarray | None = None
    offset: np.ndarray | None = None

    def __post_init__(self):
        if self.kind == "identity":
            if self.latent_dim != self.d:
                raise ValueError("identity compressor needs latent_dim == d")
            return
        if self.kind != "linear":
            raise ValueError(f"unknown compressor kind {self.kind!r}")
        E = np.asarray(self.encode_matrix, dtype=np.float64)
        D = np.asarray(self.decode_matrix, dtype=np.float64)
        if E.shape != (self.latent_dim, self.d) or D.shape != (self.d, self.latent_dim):
            raise ValueError("encode/decode matrix shapes inconsistent with d and latent_dim")
        off = np.zeros(self.d) if self.offset is None else np.asarray(self.offset, dtype=np.float64)
        if off.shape != (self.d,):
            raise ValueError("offset must have dimension d")
        object.__setattr__(self, "encode_matrix", E)
        object.__setattr__(self, "decode_matrix", D)
        object.__setattr__(self, "offset", off)

    @classmethod
    def identity(cls, d: int) -> "Compressor":
        return cls("identity", d, d)

    @classmethod
    def linear(cls, encode_matrix, decode_matrix, offset=None) -> "Compressor":
        E = np.atleast_2d(np.asarray(encode_matrix, dtype=np.float64))
        return cls("linear", E.shape[1], E.shape[0], E, decode_matrix, offset)

    def to_dict(self) -> dict:
        if self.kind == "identity":
            return {"kind": "identity", "d": self.d}
        return {"kind": "linear", "encode_matrix": self.encode_matrix.tolist(),
                "decode_matrix": self.decode_matrix.tolist(), "offset": self.offset.tolist()}

    @classmethod
    def from_dict(cls, doc: dict) -> "Compressor":
        if doc["kind"] == "identity":
            return cls.identity(int(doc["d"]))
        return cls.linear(doc["encode_matrix"], doc["decode_matrix"], doc["offset"])


def _check(x, dim, what):
    x = np.asarray(x, dtype=np.float64)
    if x.shape[-1:] != (dim,):
        raise ValueError(f"{what} must have trailing dimension {dim}, got shape {x.shape}")
    return x


def encode(c: Compressor, x) -> np.ndarray:
    x = _check(x, c.d, "input")
    if c.kind == "identity":
        return x.copy()
    return (x - c.offset) @ c.encode_matrix.T


def decode(c: Compressor, z) -> np.ndarray:
    z = _check(z, c.latent_dim, "latent")
    if c.kind == "identity":
        return z.copy()
    return z @ c.decode_matrix.T + c.offset


def fit_linear_compressor(dataset, latent_dim: int) -> Compressor:
    """Principal-subspace compressor fitted to the centred training vectors."""
    X = dataset.X if hasattr(dataset, "X") else np.asarray(dataset, dtype=np.float64)
    n, d = X.shape
    if not 1 <= latent_dim <= d:
        raise ValueError(f"latent_dim must lie in [1, {d}], got {latent_dim}")
    if n < latent_dim:
        raise ValueError(f"need at least {latent_dim} samples, got {n}")
    mean = X.mean(axis=0)
    _, _, vt = np.linalg.svd(X - mean, full_matrices=False)
    basis = vt[:latent_dim]
    if basis.shape[0] < latent_dim:
        # fewer samples than dimensions; complete with an orthonormal basis
        q, _ = np.linalg.qr(np.vstack([basis, np.eye(d)]).T)
        basis = q.T[:latent_dim]
    return Compressor("linear", d, latent_dim, basis, basis.T.copy(), mean)


def reconstruction_error(c: Compressor, X) -> float:
    X = np.asarray(X, dtype=np.float64)
    return float(np.sqrt(np.mean(np.sum((decode(c, encode(c, X)) - X) ** 2, axis=1))))
