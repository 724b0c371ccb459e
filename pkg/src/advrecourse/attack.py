"""L-inf adversarial attacks (FGSM step, PGD) and boundary-proximity probing.

All perturbed points satisfy ||x_adv - x||_inf <= epsilon and stay inside
the [0,1]^d feature box. Attack "success" always means the model's hard
prediction at x_adv differs from its prediction at the clean x.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import nn
from .data import Dataset


@dataclass
class AttackConfig:
    epsilon: float
    alpha: float
    steps: int = 10
    random_start: bool = False
    seed: int = 0

    def __post_init__(self):
        if self.epsilon < 0:
            raise ValueError("epsilon must be >= 0")
        if self.steps < 1:
            raise ValueError("steps must be >= 1")
        if self.alpha <= 0:
            raise ValueError("alpha must be > 0")


def pgd_config(epsilon: float, steps: int = 10, random_start: bool = False,
               seed: int = 0) -> AttackConfig:
    """Standard schedule alpha = 2.5 * epsilon / steps (positive floor at eps=0)."""
    alpha = 2.5 * epsilon / steps if epsilon > 0 else 0.01
    return AttackConfig(epsilon, alpha, steps, random_start, seed)


@dataclass
class AttackOutcome:
    x_adv: np.ndarray
    success: bool
    loss_before: float
    loss_after: float


def fgsm_step(model, x: np.ndarray, y: int, alpha: float) -> np.ndarray:
    """x + alpha * sign(dBCE/dx), clipped to the unit box; sign(0) = 0."""
    x = np.asarray(x, dtype=np.float64)
    g = nn.input_grads(model, x[None, :], np.asarray([y]))[0]
    return np.clip(x + alpha * np.sign(g), 0.0, 1.0)


def pgd_perturb(model, X: np.ndarray, y: np.ndarray, eps, alpha, steps: int,
                random_start: bool = False,
                rng: np.random.Generator | None = None) -> np.ndarray:
    """Batched PGD maximizing BCE of labels y; eps/alpha may be per-row vectors.

    Rows with eps == 0 are returned untouched and consume no randomness, so
    degenerate-radius runs are bit-identical to clean evaluation.
    """
    X = np.atleast_2d(np.asarray(X, dtype=np.float64))
    y = np.asarray(y, dtype=np.float64)
    eps = np.broadcast_to(np.asarray(eps, dtype=np.float64), (X.shape[0],))
    if np.all(eps == 0):
        return X.copy()
    alpha = np.broadcast_to(np.asarray(alpha, dtype=np.float64), (X.shape[0],))
    lo = np.clip(X - eps[:, None], 0.0, 1.0)
    hi = np.clip(X + eps[:, None], 0.0, 1.0)
    if random_start:
        if rng is None:
            raise ValueError("random_start requires an rng")
        X_adv = np.clip(X + rng.uniform(-1.0, 1.0, X.shape) * eps[:, None], lo, hi)
    else:
        X_adv = X.copy()
    for _ in range(steps):
        g = nn.input_grads(model, X_adv, y)
        X_adv = np.clip(X_adv + alpha[:, None] * np.sign(g), lo, hi)
    return X_adv


def pgd_attack(model, x: np.ndarray, y: int, cfg: AttackConfig) -> AttackOutcome:
    """PGD around a single instance; deterministic under cfg.seed."""
    x = np.asarray(x, dtype=np.float64)
    rng = np.random.default_rng(cfg.seed) if cfg.random_start else None
    x_adv = pgd_perturb(model, x[None, :], np.asarray([y]), cfg.epsilon,
                        cfg.alpha, cfg.steps, cfg.random_start, rng)[0]
    p_clean = nn.forward(model, x)
    p_adv = nn.forward(model, x_adv)
    return AttackOutcome(
        x_adv=x_adv,
        success=bool((p_adv >= 0.5) != (p_clean >= 0.5)),
        loss_before=nn.bce_loss(p_clean, y),
        loss_after=nn.bce_loss(p_adv, y),
    )


def attack_success_rate(model, ds_test: Dataset, cfg: AttackConfig) -> float:
    """Fraction of test rows whose prediction a fresh eps-bounded PGD flips.

    The attack targets each row's own clean prediction, matching the flip
    indicator 1(f(A_eps(x)) != f(x)).
    """
    if ds_test.n == 0:
        raise ValueError("attack_success_rate needs a non-empty test set")
    preds = nn.predict(model, ds_test.features)
    rng = np.random.default_rng(cfg.seed) if cfg.random_start else None
    X_adv = pgd_perturb(model, ds_test.features, preds, cfg.epsilon, cfg.alpha,
                        cfg.steps, cfg.random_start, rng)
    return float(np.mean(nn.predict(model, X_adv) != preds))


def min_adversarial_radius(model, x: np.ndarray, tol: float = 1e-3,
                           eps_max: float = 0.5, steps: int = 10) -> float:
    """Smallest eps (within tol) whose deterministic PGD flips the prediction.

    Bisection over [0, eps_max] with PGD success as the oracle; returns the
    eps_max sentinel when even the largest radius fails to flip.
    """
    if tol <= 0:
        raise ValueError("tol must be > 0")
    return float(min_adversarial_radius_batch(
        model, np.asarray(x, dtype=np.float64)[None, :], tol, eps_max, steps)[0])


def min_adversarial_radius_batch(model, X: np.ndarray, tol: float = 1e-3,
                                 eps_max: float = 0.5, steps: int = 10) -> np.ndarray:
    """Vectorized bisection; one batched PGD probe per bisection level."""
    X = np.atleast_2d(np.asarray(X, dtype=np.float64))
    n = X.shape[0]
    preds = nn.predict(model, X)

    def flips(eps_vec):
        active = eps_vec > 0
        out = np.zeros(n, dtype=bool)
        if np.any(active):
            alpha = 2.5 * eps_vec[active] / steps
            X_adv = pgd_perturb(model, X[active], preds[active],
                                eps_vec[active], alpha, steps)
            out[active] = nn.predict(model, X_adv) != preds[active]
        return out

    lo = np.zeros(n)
    hi = np.full(n, eps_max)
    feasible = flips(hi)
    # sentinel eps_max for rows with no flip anywhere in [0, eps_max]
    n_iter = int(np.ceil(np.log2(max(eps_max / tol, 1.0))))
    for _ in range(n_iter):
        mid = 0.5 * (lo + hi)
        probe = np.where(feasible, mid, 0.0)
        hit = flips(probe)
        hi = np.where(feasible & hit, mid, hi)
        lo = np.where(feasible & ~hit, mid, lo)
    return np.where(feasible, hi, eps_max)
