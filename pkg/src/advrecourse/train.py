"""Training regimes: standard, fixed-radius PGD, instance-adaptive, max-margin.

Every regime is mini-batch SGD with momentum on binary cross entropy and a
pure function of (initial model, dataset, config, seed). Fixed-radius
training degenerates to standard training bit-for-bit at epsilon = 0, since
a zero radius skips the attack without consuming any randomness.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import nn
from .attack import pgd_perturb
from .data import Dataset
from .model import MlpClassifier, Vae, encode_params


@dataclass
class TrainConfig:
    epochs: int = 300
    batch_size: int = 64
    learning_rate: float = 0.01
    momentum: float = 0.9
    seed: int = 0

    def __post_init__(self):
        if self.epochs < 1 or self.batch_size < 1 or self.learning_rate < 0:
            raise ValueError("epochs/batch_size must be >= 1 and learning_rate >= 0")


@dataclass
class AatState:
    """Per-instance attack radii with multiplicative grow/shrink updates."""

    eps: np.ndarray
    grow_factor: float = 1.1
    shrink_factor: float = 0.9
    eps_min: float = 1e-3
    eps_max: float = 0.5
    warmup_epochs: int = 10

    def __post_init__(self):
        self.eps = np.asarray(self.eps, dtype=np.float64)
        if self.grow_factor <= 1.0 or not 0.0 < self.shrink_factor < 1.0:
            raise ValueError("grow_factor must be > 1 and shrink_factor in (0, 1)")
        if not np.all((self.eps >= self.eps_min) & (self.eps <= self.eps_max)):
            raise ValueError("initial radii must lie inside [eps_min, eps_max]")


def init_aat_state(n: int, eps_init: float = 0.1, **kwargs) -> AatState:
    return AatState(np.full(n, eps_init), **kwargs)


@dataclass
class MmaConfig:
    d_max: float = 0.2
    beta: float = 3.0
    margin_tol: float = 1e-2
    steps: int = 10

    def __post_init__(self):
        if self.d_max < 0 or self.beta <= 0:
            raise ValueError("d_max must be >= 0 and beta > 0")


@dataclass
class MarginEstimate:
    value: float
    converged: bool


def _assert_finite(model: MlpClassifier) -> MlpClassifier:
    for arr in (*model.weights, *model.biases):
        if not np.all(np.isfinite(arr)):
            raise FloatingPointError("training produced non-finite parameters")
    return model


class _Sgd:
    """Momentum SGD over a model's parameter list."""

    def __init__(self, model: MlpClassifier, cfg: TrainConfig):
        self.model = model
        self.lr = cfg.learning_rate
        self.mu = cfg.momentum
        self.vel_w = [np.zeros_like(w) for w in model.weights]
        self.vel_b = [np.zeros_like(b) for b in model.biases]

    def step(self, wgrads, bgrads):
        for i in range(len(self.model.weights)):
            self.vel_w[i] = self.mu * self.vel_w[i] + wgrads[i]
            self.vel_b[i] = self.mu * self.vel_b[i] + bgrads[i]
            self.model.weights[i] -= self.lr * self.vel_w[i]
            self.model.biases[i] -= self.lr * self.vel_b[i]


def _batches(n: int, batch_size: int, rng: np.random.Generator):
    order = rng.permutation(n)
    for start in range(0, n, batch_size):
        yield order[start:start + batch_size]


def _check_train_data(ds: Dataset):
    if ds.n == 0 or len(np.unique(ds.labels)) < 2:
        raise ValueError("training data must be non-empty with both classes")


def train_standard(model: MlpClassifier, ds_train: Dataset,
                   cfg: TrainConfig) -> MlpClassifier:
    """Plain mini-batch BCE minimization; returns a model tagged 'natural'."""
    model = train_pgd_adv(model, ds_train, cfg, epsilon=0.0)
    model.regime = "natural"
    model.epsilon = None
    return model


def train_pgd_adv(model: MlpClassifier, ds_train: Dataset, cfg: TrainConfig,
                  epsilon: float) -> MlpClassifier:
    """Worst-case training: every batch is replaced by its PGD perturbation."""
    _check_train_data(ds_train)
    if epsilon < 0:
        raise ValueError("epsilon must be >= 0")
    model = model.copy()
    rng = np.random.default_rng(cfg.seed)
    opt = _Sgd(model, cfg)
    X, y = ds_train.features, ds_train.labels
    for _ in range(cfg.epochs):
        for idx in _batches(ds_train.n, cfg.batch_size, rng):
            Xb, yb = X[idx], y[idx]
            if epsilon > 0:
                Xb = pgd_perturb(model, Xb, yb, epsilon, 2.5 * epsilon / 10,
                                 steps=10, random_start=True, rng=rng)
            opt.step(*nn.batch_param_grads(model, Xb, yb))
    model.regime = "pgd"
    model.epsilon = epsilon
    return _assert_finite(model)


def train_iaat(model: MlpClassifier, ds_train: Dataset, cfg: TrainConfig,
               aat: AatState) -> tuple[MlpClassifier, AatState]:
    """Instance-adaptive training: each row carries its own radius eps_i.

    After a standard-training warmup, every epoch attacks each instance at
    its current eps_i, trains on the perturbed batch, then grows radii whose
    attack failed to flip the prediction and shrinks those whose attack
    succeeded, clamped to [eps_min, eps_max].
    """
    _check_train_data(ds_train)
    if aat.eps.shape[0] != ds_train.n:
        raise ValueError("AatState radius vector must match the training set size")
    model = model.copy()
    eps = aat.eps.copy()
    rng = np.random.default_rng(cfg.seed)
    opt = _Sgd(model, cfg)
    X, y = ds_train.features, ds_train.labels
    for epoch in range(cfg.epochs):
        warm = epoch < aat.warmup_epochs
        for idx in _batches(ds_train.n, cfg.batch_size, rng):
            Xb, yb = X[idx], y[idx]
            if warm:
                opt.step(*nn.batch_param_grads(model, Xb, yb))
                continue
            eps_b = eps[idx]
            X_adv = pgd_perturb(model, Xb, yb, eps_b, 2.5 * eps_b / 10,
                                steps=10, random_start=True, rng=rng)
            flipped = nn.predict(model, X_adv) != nn.predict(model, Xb)
            opt.step(*nn.batch_param_grads(model, X_adv, yb))
            eps[idx] = np.clip(eps_b * np.where(flipped, aat.shrink_factor,
                                                aat.grow_factor),
                               aat.eps_min, aat.eps_max)
        assert np.all((eps >= aat.eps_min) & (eps <= aat.eps_max))
    model.regime = "iaat"
    model.epsilon = None
    final = AatState(eps, aat.grow_factor, aat.shrink_factor, aat.eps_min,
                     aat.eps_max, aat.warmup_epochs)
    return _assert_finite(model), final


def _margin_probe(model, X, preds, cap: float, tol: float, steps: int):
    """Vectorized PGD bisection up to `cap`; keeps the flipping points.

    Returns (margin, feasible, x_at_margin): rows where no flip exists inside
    the cap report margin = cap with feasible False.
    """
    n = X.shape[0]
    lo = np.zeros(n)
    hi = np.full(n, cap)
    x_hit = pgd_perturb(model, X, preds, hi, 2.5 * hi / steps, steps)
    feasible = nn.predict(model, x_hit) != preds
    n_iter = int(np.ceil(np.log2(max(cap / tol, 1.0))))
    for _ in range(n_iter):
        mid = 0.5 * (lo + hi)
        probe = np.where(feasible, mid, 0.0)
        active = probe > 0
        hit = np.zeros(n, dtype=bool)
        if np.any(active):
            x_mid = pgd_perturb(model, X[active], preds[active], probe[active],
                                2.5 * probe[active] / steps, steps)
            sub_hit = nn.predict(model, x_mid) != preds[active]
            hit[active] = sub_hit
            rows = np.flatnonzero(active)[sub_hit]
            x_hit[rows] = x_mid[sub_hit]
        hi = np.where(feasible & hit, mid, hi)
        lo = np.where(feasible & ~hit, mid, lo)
    return hi, feasible, x_hit


def estimate_margin(model: MlpClassifier, x: np.ndarray, y: int,
                    mma: MmaConfig, eps_max: float = 0.5) -> MarginEstimate:
    """Distance to the decision boundary via the PGD line search.

    Misclassified points have margin 0 by definition; points that no attack
    inside eps_max can flip report the eps_max sentinel with converged False.
    """
    x = np.asarray(x, dtype=np.float64)
    pred = int(nn.predict(model, x[None, :])[0])
    if pred != y:
        return MarginEstimate(0.0, True)
    margin, feasible, _ = _margin_probe(model, x[None, :], np.asarray([pred]),
                                        eps_max, mma.margin_tol, mma.steps)
    if not feasible[0]:
        return MarginEstimate(float(eps_max), False)
    return MarginEstimate(float(margin[0]), True)


def train_mma(model: MlpClassifier, ds_train: Dataset, cfg: TrainConfig,
              mma: MmaConfig) -> MlpClassifier:
    """Margin maximization: hinge on margins below d_max, scaled BCE otherwise.

    Correctly classified rows whose estimated margin is under d_max get a
    gradient step on the boundary-probing adversarial example; misclassified
    rows get a standard BCE step weighted by beta.
    """
    _check_train_data(ds_train)
    model = model.copy()
    rng = np.random.default_rng(cfg.seed)
    opt = _Sgd(model, cfg)
    X, y = ds_train.features, ds_train.labels
    for _ in range(cfg.epochs):
        for idx in _batches(ds_train.n, cfg.batch_size, rng):
            Xb, yb = X[idx], y[idx]
            preds = nn.predict(model, Xb)
            correct = preds == yb
            rows, labels, weights = [], [], []
            if mma.d_max > 0 and np.any(correct):
                _, active, x_adv = _margin_probe(model, Xb[correct],
                                                 preds[correct], mma.d_max,
                                                 mma.margin_tol, mma.steps)
                if np.any(active):
                    rows.append(x_adv[active])
                    labels.append(yb[correct][active])
                    weights.append(np.ones(int(active.sum())))
            if np.any(~correct):
                rows.append(Xb[~correct])
                labels.append(yb[~correct])
                weights.append(np.full(int((~correct).sum()), mma.beta))
            if not rows:
                continue
            Xs = np.vstack(rows)
            ys = np.concatenate(labels)
            ws = np.concatenate(weights) / len(idx)
            opt.step(*nn.param_grads_weighted(model, Xs, ys, ws))
    model.regime = "mma"
    model.epsilon = None
    return _assert_finite(model)


def train_vae(vae: Vae, ds_train: Dataset, cfg: TrainConfig,
              kl_weight: float = 0.05) -> tuple[Vae, list[float]]:
    """Fit the VAE on scaled features; returns (vae, per-epoch mean losses).

    Loss per instance is the feature-summed squared reconstruction error
    plus kl_weight times the KL divergence to a standard normal. The small
    default KL weight keeps low-dimensional structure from collapsing into
    the prior.
    """
    if ds_train.n == 0:
        raise ValueError("training data must be non-empty")
    X_all = ds_train.features
    if X_all.min() < 0.0 or X_all.max() > 1.0:
        raise ValueError("VAE training expects features scaled to [0, 1]")
    vae = vae.copy()
    rng = np.random.default_rng(cfg.seed)
    params = vae.enc_weights + vae.enc_biases + vae.dec_weights + vae.dec_biases
    vel = [np.zeros_like(p) for p in params]
    L = vae.latent_dim
    losses = []
    for _ in range(cfg.epochs):
        epoch_loss, n_seen = 0.0, 0
        for idx in _batches(ds_train.n, cfg.batch_size, rng):
            Xb = X_all[idx]
            B = Xb.shape[0]
            # forward with cached intermediates
            pre_e0 = Xb @ vae.enc_weights[0] + vae.enc_biases[0]
            h_e = np.maximum(pre_e0, 0.0)
            enc_out = h_e @ vae.enc_weights[1] + vae.enc_biases[1]
            mu, logvar = enc_out[:, :L], enc_out[:, L:]
            std = np.exp(0.5 * logvar)
            eta = rng.standard_normal(mu.shape)
            z = mu + std * eta
            pre_d0 = z @ vae.dec_weights[0] + vae.dec_biases[0]
            h_d = np.maximum(pre_d0, 0.0)
            xh = nn.sigmoid(h_d @ vae.dec_weights[1] + vae.dec_biases[1])

            recon = np.sum((xh - Xb) ** 2, axis=1)
            kl = -0.5 * np.sum(1.0 + logvar - mu ** 2 - np.exp(logvar), axis=1)
            loss = float(np.mean(recon + kl_weight * kl))
            epoch_loss += loss * B
            n_seen += B

            # backward (mean loss over the batch)
            d_xh = 2.0 * (xh - Xb) / B
            delta_d1 = d_xh * xh * (1.0 - xh)
            gWd1 = h_d.T @ delta_d1
            gbd1 = delta_d1.sum(axis=0)
            d_hd = delta_d1 @ vae.dec_weights[1].T
            delta_d0 = d_hd * (pre_d0 > 0)
            gWd0 = z.T @ delta_d0
            gbd0 = delta_d0.sum(axis=0)
            dz = delta_d0 @ vae.dec_weights[0].T
            dmu = dz + kl_weight * mu / B
            dlogvar = dz * eta * 0.5 * std + kl_weight * 0.5 * (np.exp(logvar) - 1.0) / B
            delta_e1 = np.concatenate([dmu, dlogvar], axis=1)
            gWe1 = h_e.T @ delta_e1
            gbe1 = delta_e1.sum(axis=0)
            d_he = delta_e1 @ vae.enc_weights[1].T
            delta_e0 = d_he * (pre_e0 > 0)
            gWe0 = Xb.T @ delta_e0
            gbe0 = delta_e0.sum(axis=0)

            grads = [gWe0, gWe1, gbe0, gbe1, gWd0, gWd1, gbd0, gbd1]
            for p, v, g in zip(params, vel, grads):
                v *= cfg.momentum
                v += g
                p -= cfg.learning_rate * v
        losses.append(epoch_loss / n_seen)
    for p in params:
        if not np.all(np.isfinite(p)):
            raise FloatingPointError("VAE training produced non-finite parameters")
    return vae, losses
