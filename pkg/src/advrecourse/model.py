"""Concrete networks: the binary MLP classifier and the small VAE.

The classifier defaults to hidden widths (18, 9, 3) with ReLU activations
and a sigmoid output. Parameters are Glorot-uniform at init, biases zero.
Model artifacts are JSON: layer dims, a flat parameter array, the fitted
scaler, the training regime tag, the training epsilon (if any) and seed.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field

import numpy as np

from . import nn
from .data import Scaler

DEFAULT_HIDDEN = (18, 9, 3)
REGIMES = ("natural", "pgd", "iaat", "mma")


@dataclass
class MlpClassifier:
    layer_dims: list[int]
    weights: list[np.ndarray]
    biases: list[np.ndarray]
    seed: int
    regime: str = "untrained"
    epsilon: float | None = None

    def copy(self) -> "MlpClassifier":
        return MlpClassifier(list(self.layer_dims),
                             [w.copy() for w in self.weights],
                             [b.copy() for b in self.biases],
                             self.seed, self.regime, self.epsilon)


@dataclass
class Vae:
    """Encoder d -> (mu, log var), decoder latent -> (0,1)^d, both 1-hidden-layer."""

    enc_weights: list[np.ndarray]
    enc_biases: list[np.ndarray]
    dec_weights: list[np.ndarray]
    dec_biases: list[np.ndarray]
    latent_dim: int
    seed: int

    @property
    def input_dim(self) -> int:
        return self.enc_weights[0].shape[0]

    def copy(self) -> "Vae":
        return Vae([w.copy() for w in self.enc_weights],
                   [b.copy() for b in self.enc_biases],
                   [w.copy() for w in self.dec_weights],
                   [b.copy() for b in self.dec_biases],
                   self.latent_dim, self.seed)


def _glorot(rng: np.random.Generator, fan_in: int, fan_out: int) -> np.ndarray:
    limit = math.sqrt(6.0 / (fan_in + fan_out))
    return rng.uniform(-limit, limit, size=(fan_in, fan_out))


def init_classifier(d: int, seed: int,
                    hidden: tuple[int, ...] = DEFAULT_HIDDEN) -> MlpClassifier:
    """Glorot-uniform weights, zero biases, deterministic under seed."""
    if d < 1:
        raise ValueError("input dimension must be >= 1")
    dims = [d, *hidden, 1]
    rng = np.random.default_rng(seed)
    weights = [_glorot(rng, dims[i], dims[i + 1]) for i in range(len(dims) - 1)]
    biases = [np.zeros(dims[i + 1]) for i in range(len(dims) - 1)]
    return MlpClassifier(dims, weights, biases, seed)


def default_latent_dim(d: int) -> int:
    return max(2, math.ceil(d / 4))


def init_vae(d: int, seed: int, latent_dim: int | None = None,
             hidden: int = 16) -> Vae:
    latent = latent_dim if latent_dim is not None else default_latent_dim(d)
    rng = np.random.default_rng(seed)
    enc_w = [_glorot(rng, d, hidden), _glorot(rng, hidden, 2 * latent)]
    enc_b = [np.zeros(hidden), np.zeros(2 * latent)]
    dec_w = [_glorot(rng, latent, hidden), _glorot(rng, hidden, d)]
    dec_b = [np.zeros(hidden), np.zeros(d)]
    return Vae(enc_w, enc_b, dec_w, dec_b, latent, seed)


def encode_params(vae: Vae, X: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Encoder heads (mu, log var) for a batch, each (n, latent_dim)."""
    X = np.atleast_2d(np.asarray(X, dtype=np.float64))
    h = np.maximum(X @ vae.enc_weights[0] + vae.enc_biases[0], 0.0)
    out = h @ vae.enc_weights[1] + vae.enc_biases[1]
    return out[:, :vae.latent_dim], out[:, vae.latent_dim:]


def encode(vae: Vae, x: np.ndarray, rng: np.random.Generator | None = None) -> np.ndarray:
    """Latent sample mu + exp(log var / 2) * eta; eta = 0 when rng is None."""
    mu, logvar = encode_params(vae, x)
    if rng is None:
        z = mu
    else:
        z = mu + np.exp(0.5 * logvar) * rng.standard_normal(mu.shape)
    return z[0] if np.asarray(x).ndim == 1 else z


def decode(vae: Vae, z: np.ndarray) -> np.ndarray:
    """Decoder output in (0, 1)^d."""
    z = np.asarray(z, dtype=np.float64)
    single = z.ndim == 1
    Z = np.atleast_2d(z)
    if Z.shape[1] != vae.latent_dim:
        raise ValueError(f"latent vector has dim {Z.shape[1]}, expected {vae.latent_dim}")
    h = np.maximum(Z @ vae.dec_weights[0] + vae.dec_biases[0], 0.0)
    out = nn.sigmoid(h @ vae.dec_weights[1] + vae.dec_biases[1])
    return out[0] if single else out


def _flatten(weights, biases) -> list[float]:
    parts = []
    for w, b in zip(weights, biases):
        parts.append(w.ravel())
        parts.append(b.ravel())
    return np.concatenate(parts).tolist()


def _unflatten(flat: np.ndarray, dims: list[int]):
    weights, biases, pos = [], [], 0
    for i in range(len(dims) - 1):
        n_w = dims[i] * dims[i + 1]
        weights.append(flat[pos:pos + n_w].reshape(dims[i], dims[i + 1]).copy())
        pos += n_w
        biases.append(flat[pos:pos + dims[i + 1]].copy())
        pos += dims[i + 1]
    if pos != flat.size:
        raise ValueError("parameter array length does not match layer dims")
    return weights, biases


def save_classifier(model: MlpClassifier, path: str, scaler: Scaler | None = None) -> None:
    doc = {
        "layer_dims": list(model.layer_dims),
        "params": _flatten(model.weights, model.biases),
        "scaler": scaler.to_dict() if scaler is not None else None,
        "regime": model.regime,
        "epsilon": model.epsilon,
        "seed": model.seed,
    }
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(doc, fh)


def load_classifier(path: str) -> tuple[MlpClassifier, Scaler | None]:
    with open(path, encoding="utf-8") as fh:
        doc = json.load(fh)
    dims = [int(v) for v in doc["layer_dims"]]
    weights, biases = _unflatten(np.asarray(doc["params"], dtype=np.float64), dims)
    model = MlpClassifier(dims, weights, biases, int(doc["seed"]),
                          doc["regime"], doc["epsilon"])
    scaler = Scaler.from_dict(doc["scaler"]) if doc.get("scaler") else None
    return model, scaler


def save_vae(vae: Vae, path: str) -> None:
    d, hidden = vae.input_dim, vae.enc_weights[0].shape[1]
    doc = {
        "input_dim": d,
        "hidden": hidden,
        "latent_dim": vae.latent_dim,
        "enc_params": _flatten(vae.enc_weights, vae.enc_biases),
        "dec_params": _flatten(vae.dec_weights, vae.dec_biases),
        "seed": vae.seed,
    }
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(doc, fh)


def load_vae(path: str) -> Vae:
    with open(path, encoding="utf-8") as fh:
        doc = json.load(fh)
    d, hidden, latent = doc["input_dim"], doc["hidden"], doc["latent_dim"]
    enc_w, enc_b = _unflatten(np.asarray(doc["enc_params"], dtype=np.float64),
                              [d, hidden, 2 * latent])
    dec_w, dec_b = _unflatten(np.asarray(doc["dec_params"], dtype=np.float64),
                              [latent, hidden, d])
    return Vae(enc_w, enc_b, dec_w, dec_b, latent, int(doc["seed"]))
