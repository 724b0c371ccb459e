"""Counterfactual generators: growing spheres, score-gradient search, VAE latent search.

All methods require a negatively classified factual, clip candidates to the
[0,1]^d feature box, and report costs in the scaled input space. A failed
search returns success=False with empty counterfactual fields rather than
raising, so batch metrics keep their denominators.
"""

from __future__ import annotations

import json
from dataclasses import dataclass

import numpy as np

from . import nn
from .data import Dataset, negatives
from .model import Vae, decode, encode

METHODS = ("growing_spheres", "scfe", "cchvae")


@dataclass
class RecourseConfig:
    method: str = "growing_spheres"
    max_iterations: int = 20
    # growing spheres
    samples_per_shell: int = 1000
    initial_radius: float = 0.05
    gamma: float = 0.0
    # scfe
    lambda_init: float = 0.1
    lambda_growth: float = 2.0
    lambda_max: float = 1000.0
    step_size: float = 0.01
    target_score: float = 0.55
    inner_steps: int = 500
    # cchvae
    latent_samples: int = 1000
    latent_radius: float = 0.25
    seed: int = 0

    def __post_init__(self):
        if self.method not in METHODS:
            raise ValueError(f"method must be one of {METHODS}, got {self.method!r}")
        if min(self.max_iterations, self.samples_per_shell, self.inner_steps,
               self.latent_samples) < 1:
            raise ValueError("iteration and sample counts must be >= 1")
        if self.gamma < 0:
            raise ValueError("gamma must be >= 0")
        if not 0.5 <= self.target_score < 1.0:
            raise ValueError("target_score must lie in [0.5, 1)")


@dataclass
class CounterfactualResult:
    x: np.ndarray
    x_cf: np.ndarray | None
    success: bool
    cost_l1: float
    cost_l2: float
    cost_linf: float
    method: str
    iterations_used: int
    index: int = -1


def _result(x, x_cf, method, iterations, index=-1) -> CounterfactualResult:
    if x_cf is None:
        return CounterfactualResult(np.asarray(x, dtype=np.float64), None, False,
                                    float("nan"), float("nan"), float("nan"),
                                    method, iterations, index)
    x = np.asarray(x, dtype=np.float64)
    x_cf = np.asarray(x_cf, dtype=np.float64)
    diff = x_cf - x
    return CounterfactualResult(
        x, x_cf, True,
        float(np.sum(np.abs(diff))),
        float(np.linalg.norm(diff)),
        float(np.max(np.abs(diff))),
        method, iterations, index,
    )


def _require_negative(model, x: np.ndarray) -> np.ndarray:
    x = np.asarray(x, dtype=np.float64)
    if nn.forward(model, x) >= 0.5:
        raise ValueError("recourse requires a negatively classified factual")
    return x


def _sample_annulus(rng, center: np.ndarray, r_in: float, r_out: float,
                    n: int) -> np.ndarray:
    """Uniform draws from the l2 annulus r_in <= ||z - center|| <= r_out."""
    d = center.shape[0]
    dirs = rng.standard_normal((n, d))
    dirs /= np.linalg.norm(dirs, axis=1, keepdims=True)
    u = rng.uniform(size=n)
    radii = (r_in ** d + u * (r_out ** d - r_in ** d)) ** (1.0 / d)
    return center + radii[:, None] * dirs


def growing_spheres(model, x: np.ndarray, cfg: RecourseConfig,
                    rng: np.random.Generator | None = None) -> CounterfactualResult:
    """Random search over l2 shells of doubling outer radius.

    Once a shell contains a flip, the half-shell between the last failing
    radius and the successful one is sampled once more, and the flipped
    candidate minimizing ||x' - x||_2 + gamma * ||x' - x||_0 is returned.
    """
    x = _require_negative(model, x)
    if rng is None:
        rng = np.random.default_rng(cfg.seed)
    d = x.shape[0]
    r_cap = 2.0 * np.sqrt(d)  # beyond the box diameter nothing new is reachable
    r_in, r_out = 0.0, min(cfg.initial_radius, r_cap)
    for it in range(cfg.max_iterations):
        cand = np.clip(_sample_annulus(rng, x, r_in, r_out, cfg.samples_per_shell),
                       0.0, 1.0)
        hits = cand[nn.predict(model, cand) == 1]
        if hits.shape[0] > 0:
            mid = 0.5 * (r_in + r_out)
            refine = np.clip(_sample_annulus(rng, x, r_in, mid, cfg.samples_per_shell),
                             0.0, 1.0)
            hits2 = refine[nn.predict(model, refine) == 1]
            pool = np.vstack([hits, hits2]) if hits2.shape[0] else hits
            diff = pool - x
            objective = (np.linalg.norm(diff, axis=1)
                         + cfg.gamma * np.count_nonzero(diff, axis=1))
            best = pool[int(np.argmin(objective))]
            return _result(x, best, "growing_spheres", it + 1)
        r_in, r_out = r_out, min(2.0 * r_out, r_cap)
    return _result(x, None, "growing_spheres", cfg.max_iterations)


def _scfe_batch(model, X0: np.ndarray, cfg: RecourseConfig):
    """Vectorized score-target descent; rows are independent searches."""
    X0 = np.atleast_2d(X0)
    n = X0.shape[0]
    x_cur = X0.copy()
    lam = np.full(n, cfg.lambda_init)
    done = np.zeros(n, dtype=bool)
    stages = np.zeros(n, dtype=np.int64)
    max_move = 0.05  # per-step trust region; keeps large-lambda stages stable
    for _ in range(cfg.max_iterations):
        active = ~done
        if not np.any(active):
            break
        stages[active] += 1
        for _ in range(cfg.inner_steps):
            Xa = x_cur[active]
            p = nn.predict_proba(model, Xa)
            grad = (lam[active, None] * 2.0 * (p - cfg.target_score)[:, None]
                    * nn.prob_grads(model, Xa)
                    + 2.0 * (Xa - X0[active]))
            move = -cfg.step_size * grad
            norms = np.linalg.norm(move, axis=1)
            big = norms > max_move
            if np.any(big):
                move[big] *= (max_move / norms[big])[:, None]
            if np.all(norms < 1e-9):
                break
            x_cur[active] = np.clip(Xa + move, 0.0, 1.0)
        p = nn.predict_proba(model, x_cur)
        done |= (p >= 0.5) & (np.abs(p - cfg.target_score) <= 0.01)
        lam = np.where(done, lam, np.minimum(lam * cfg.lambda_growth, cfg.lambda_max))
    flipped = nn.predict_proba(model, x_cur) >= 0.5
    return x_cur, flipped, stages


def scfe(model, x: np.ndarray, cfg: RecourseConfig) -> CounterfactualResult:
    """Gradient search on lambda * (f(x') - target)^2 + ||x' - x||_2^2.

    Lambda grows by lambda_growth after every inner run that fails to reach
    a flipped iterate with score near the target, up to lambda_max.
    """
    x = _require_negative(model, x)
    x_cf, flipped, stages = _scfe_batch(model, x[None, :], cfg)
    if not flipped[0]:
        return _result(x, None, "scfe", int(stages[0]))
    return _result(x, x_cf[0], "scfe", int(stages[0]))


def cchvae(model, vae: Vae, x: np.ndarray, cfg: RecourseConfig,
           rng: np.random.Generator | None = None) -> CounterfactualResult:
    """Latent-space shell search: decode E(x) + z' for z' of growing norm.

    Among decoded flips of the first successful shell, the one with the
    smallest ||z'|| wins; costs are still measured in the input space.
    """
    x = _require_negative(model, x)
    if rng is None:
        rng = np.random.default_rng(cfg.seed)
    z0 = encode(vae, x)  # deterministic mean encoding
    x0_dec = decode(vae, z0)
    if int(nn.predict(model, x0_dec[None, :])[0]) == 1:
        return _result(x, x0_dec, "cchvae", 0)
    r_in, r_out = 0.0, cfg.latent_radius
    for it in range(cfg.max_iterations):
        z_shift = _sample_annulus(rng, np.zeros_like(z0), r_in, r_out,
                                  cfg.latent_samples)
        cand = decode(vae, z0 + z_shift)
        flips = nn.predict(model, cand) == 1
        if np.any(flips):
            norms = np.linalg.norm(z_shift[flips], axis=1)
            best = cand[flips][int(np.argmin(norms))]
            return _result(x, best, "cchvae", it + 1)
        r_in, r_out = r_out, 2.0 * r_out
    return _result(x, None, "cchvae", cfg.max_iterations)


def batch_recourse(model, ds_test: Dataset, cfg: RecourseConfig, n: int,
                   vae: Vae | None = None) -> list[CounterfactualResult]:
    """Run the configured method on up to n negatively classified test rows.

    Row selection and per-row searches are deterministic under cfg.seed and
    independent across rows; results come back in ascending factual order
    with the factual index attached.
    """
    neg = negatives(ds_test, model)
    if neg.size == 0:
        raise ValueError("no negatively classified instances to generate recourse for")
    if cfg.method == "cchvae" and vae is None:
        raise ValueError("cchvae requires a trained VAE")
    rng = np.random.default_rng(cfg.seed)
    chosen = np.sort(rng.choice(neg, size=min(n, neg.size), replace=False))
    results: list[CounterfactualResult] = []
    if cfg.method == "scfe":
        X = ds_test.features[chosen]
        x_cf, flipped, stages = _scfe_batch(model, X, cfg)
        for row, idx in enumerate(chosen):
            cf = x_cf[row] if flipped[row] else None
            results.append(_result(X[row], cf, "scfe", int(stages[row]), int(idx)))
    else:
        for idx in chosen:
            row_rng = np.random.default_rng(
                np.random.SeedSequence(entropy=cfg.seed, spawn_key=(int(idx),)))
            x = ds_test.features[idx]
            if cfg.method == "growing_spheres":
                res = growing_spheres(model, x, cfg, row_rng)
            else:
                res = cchvae(model, vae, x, cfg, row_rng)
            res.index = int(idx)
            results.append(res)
    for res in results:  # flip soundness, re-verified post hoc
        if res.success and int(nn.predict(model, res.x_cf[None, :])[0]) != 1:
            raise RuntimeError(f"counterfactual for index {res.index} does not flip")
    return results


def to_json_line(res: CounterfactualResult) -> str:
    def cost(v):
        return None if np.isnan(v) else v

    doc = {
        "index": res.index,
        "x": res.x.tolist(),
        "x_cf": None if res.x_cf is None else res.x_cf.tolist(),
        "success": res.success,
        "cost_l1": cost(res.cost_l1),
        "cost_l2": cost(res.cost_l2),
        "cost_linf": cost(res.cost_linf),
        "method": res.method,
        "iterations_used": res.iterations_used,
    }
    return json.dumps(doc)


def from_json_line(line: str) -> CounterfactualResult:
    doc = json.loads(line)

    def cost(v):
        return float("nan") if v is None else float(v)

    x_cf = None if doc["x_cf"] is None else np.asarray(doc["x_cf"], dtype=np.float64)
    return CounterfactualResult(
        np.asarray(doc["x"], dtype=np.float64), x_cf, doc["success"],
        cost(doc["cost_l1"]), cost(doc["cost_l2"]), cost(doc["cost_linf"]),
        doc["method"], doc["iterations_used"], doc["index"],
    )


def save_results(results: list[CounterfactualResult], path: str) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for res in results:
            fh.write(to_json_line(res) + "\n")


def load_results(path: str) -> list[CounterfactualResult]:
    with open(path, encoding="utf-8") as fh:
        return [from_json_line(line) for line in fh if line.strip()]
