"""Suite orchestration: train the 7-model family, run every recourse method,
compute all metrics, and persist artifacts, tables and figures.

The whole suite is a pure function of (config, seed): per-model seeds are
derived by hashing the global seed with a stage tag, so adding one regime
never perturbs another's randomness. Empty config runs the synthetic-blobs
pipeline end to end.
"""

from __future__ import annotations

import copy
import csv
import hashlib
import json
import os
from dataclasses import dataclass, field
from datetime import datetime, timezone

import numpy as np

from . import figures, metrics as met, svg
from .data import Dataset, apply_scale, fit_scale, load_csv, make_blobs, split
from .model import (init_classifier, init_vae, save_classifier, save_vae)
from .recourse import RecourseConfig, batch_recourse, save_results
from .train import (AatState, MmaConfig, TrainConfig, init_aat_state,
                    train_iaat, train_mma, train_pgd_adv, train_standard,
                    train_vae)

DEFAULT_CONFIG: dict = {
    "data": {
        "csv": None,
        "synthetic": {"n_per_class": 250, "d": 2, "separation": 0.6, "noise": 0.05},
    },
    "test_fraction": 0.2,
    "train": {"epochs": 300, "batch_size": 64, "learning_rate": 0.01, "momentum": 0.9},
    "epsilon_grid": [0.05, 0.1, 0.15, 0.2],
    "iaat": {"eps_init": 0.1, "grow_factor": 1.1, "shrink_factor": 0.9,
             "eps_min": 1e-3, "eps_max": 0.5, "warmup_epochs": 10},
    "mma": {"d_max": 0.2, "beta": 3.0, "margin_tol": 1e-2, "steps": 10},
    "vae": {"epochs": 200, "learning_rate": 0.01, "kl_weight": 0.05,
            "latent_dim": None},
    "recourse": {
        "n": 1000,
        "methods": ["growing_spheres", "scfe", "cchvae"],
        "growing_spheres": {},
        "scfe": {},
        "cchvae": {},
    },
    "metrics": {"asr_radii": [0.05, 0.1, 0.15, 0.2, 0.25],
                "low_cost_threshold": 0.05, "knn_k": 5, "sphere_fraction": 0.2,
                "boundary_sample": 200, "boundary_bins": 20,
                "eps_max": 0.5, "bisect_tol": 1e-3},
    "seed": 42,
}


class StageError(RuntimeError):
    """A suite stage failed; partial outputs before it are retained."""

    def __init__(self, stage: str, cause: Exception):
        super().__init__(f"stage '{stage}' failed: {cause}")
        self.stage = stage


@dataclass
class SuiteReport:
    report: dict
    out_dir: str
    files: list[str] = field(default_factory=list)


def merge_config(overrides: dict | None) -> dict:
    """Deep-merge user overrides onto the defaults."""

    def merge(base, over):
        out = copy.deepcopy(base)
        for key, val in (over or {}).items():
            if isinstance(val, dict) and isinstance(out.get(key), dict):
                out[key] = merge(out[key], val)
            else:
                out[key] = copy.deepcopy(val)
        return out

    cfg = merge(DEFAULT_CONFIG, overrides or {})
    grid = cfg["epsilon_grid"]
    if (not grid or sorted(grid) != list(grid)
            or any(not 0.0 < e <= 0.5 for e in grid)):
        raise ValueError("epsilon_grid must be non-empty, ascending, within (0, 0.5]")
    return cfg


def config_hash(cfg: dict) -> str:
    return hashlib.sha256(
        json.dumps(cfg, sort_keys=True).encode("utf-8")).hexdigest()[:16]


def derive_seed(seed: int, tag: str) -> int:
    digest = hashlib.sha256(f"{seed}:{tag}".encode("utf-8")).digest()
    return int.from_bytes(digest[:4], "little")


def _prepare_data(cfg: dict) -> tuple[Dataset, Dataset]:
    """Load or synthesize, split, then min-max scale on the training split."""
    data_cfg = cfg["data"]
    if data_cfg.get("csv"):
        ds = load_csv(data_cfg["csv"])
    else:
        syn = data_cfg["synthetic"]
        ds = make_blobs(syn["n_per_class"], syn["d"], syn["separation"],
                        syn["noise"], derive_seed(cfg["seed"], "data"))
    parts = split(ds, cfg["test_fraction"], derive_seed(cfg["seed"], "split"))
    train_scaled = fit_scale(parts.train)
    test_scaled = apply_scale(parts.test, train_scaled.scaler)
    return train_scaled, test_scaled


def model_keys(cfg: dict) -> list[str]:
    return (["natural"]
            + [f"pgd@{eps:g}" for eps in cfg["epsilon_grid"]]
            + ["iaat", "mma"])


def _train_models(cfg: dict, ds_train: Dataset):
    seed = cfg["seed"]
    init = init_classifier(ds_train.d, derive_seed(seed, "init"))
    models, extras = {}, {}
    for key in model_keys(cfg):
        tcfg = TrainConfig(seed=derive_seed(seed, f"train:{key}"), **cfg["train"])
        if key == "natural":
            models[key] = train_standard(init, ds_train, tcfg)
        elif key.startswith("pgd@"):
            eps = float(key.split("@", 1)[1])
            models[key] = train_pgd_adv(init, ds_train, tcfg, eps)
        elif key == "iaat":
            state = init_aat_state(
                ds_train.n, cfg["iaat"]["eps_init"],
                grow_factor=cfg["iaat"]["grow_factor"],
                shrink_factor=cfg["iaat"]["shrink_factor"],
                eps_min=cfg["iaat"]["eps_min"], eps_max=cfg["iaat"]["eps_max"],
                warmup_epochs=cfg["iaat"]["warmup_epochs"])
            models[key], extras["aat_state"] = train_iaat(init, ds_train, tcfg, state)
        else:
            models[key] = train_mma(init, ds_train, tcfg, MmaConfig(**cfg["mma"]))
    return models, extras


def _train_suite_vae(cfg: dict, ds_train: Dataset):
    vcfg = cfg["vae"]
    vae = init_vae(ds_train.d, derive_seed(cfg["seed"], "vae"),
                   latent_dim=vcfg["latent_dim"])
    tcfg = TrainConfig(epochs=vcfg["epochs"], batch_size=cfg["train"]["batch_size"],
                       learning_rate=vcfg["learning_rate"],
                       momentum=cfg["train"]["momentum"],
                       seed=derive_seed(cfg["seed"], "vae:train"))
    return train_vae(vae, ds_train, tcfg, kl_weight=vcfg["kl_weight"])


def run_suite(config: dict | None = None, out_dir: str = "out") -> SuiteReport:
    """Execute the full pipeline, writing all artifacts under out_dir."""
    cfg = merge_config(config)
    os.makedirs(out_dir, exist_ok=True)
    chash = config_hash(cfg)
    written: list[str] = []

    def stage(name, fn):
        try:
            return fn()
        except Exception as exc:
            raise StageError(name, exc) from exc

    ds_train, ds_test = stage("data", lambda: _prepare_data(cfg))

    models, extras = stage("train", lambda: _train_models(cfg, ds_train))
    for key, model in models.items():
        path = os.path.join(out_dir, f"model_{key}.json")
        save_classifier(model, path, ds_train.scaler)
        written.append(path)
    if "aat_state" in extras:
        path = os.path.join(out_dir, "iaat_radii.json")
        with open(path, "w", encoding="utf-8") as fh:
            json.dump({"config_hash": chash,
                       "eps": extras["aat_state"].eps.tolist()}, fh)
        written.append(path)

    vae, vae_losses = stage("vae", lambda: _train_suite_vae(cfg, ds_train))
    vae_path = os.path.join(out_dir, "vae.json")
    save_vae(vae, vae_path)
    written.append(vae_path)

    def recourse_stage():
        out = {}
        for key, model in models.items():
            out[key] = {}
            for method in cfg["recourse"]["methods"]:
                rc = RecourseConfig(
                    method=method,
                    seed=derive_seed(cfg["seed"], f"recourse:{key}:{method}"),
                    **cfg["recourse"].get(method, {}))
                out[key][method] = batch_recourse(model, ds_test, rc,
                                                  cfg["recourse"]["n"], vae=vae)
                path = os.path.join(out_dir, f"recourse_{key}_{method}.jsonl")
                save_results(out[key][method], path)
                written.append(path)
        return out

    recourse_results = stage("recourse", recourse_stage)

    def metrics_stage():
        mcfg = met.MetricsConfig(seed=derive_seed(cfg["seed"], "metrics"),
                                 **cfg["metrics"])
        positive_pool = ds_train.features[ds_train.labels == 1]
        model_block, recourse_block = {}, {}
        for key, model in models.items():
            hist = met.boundary_histogram(
                model, ds_test, mcfg.boundary_sample, mcfg.boundary_bins,
                mcfg.eps_max, mcfg.bisect_tol, seed=mcfg.seed)
            entry = {
                "regime": model.regime,
                "epsilon": model.epsilon,
                "accuracy": met.accuracy(model, ds_test),
                "f1_minority": met.f1_minority(model, ds_test),
                "asr_curve": {f"{eps:g}": rate for eps, rate in
                              met.asr_curve(model, ds_test, mcfg.asr_radii,
                                            seed=mcfg.seed).items()},
                "boundary_radii": hist.to_dict(),
            }
            if key == "iaat" and "aat_state" in extras:
                eps = extras["aat_state"].eps
                entry["discovered_radii"] = met.histogram(
                    eps, mcfg.boundary_bins, 0.0, float(cfg["iaat"]["eps_max"])
                ).to_dict()
            model_block[key] = entry
            recourse_block[key] = {}
            for method, results in recourse_results[key].items():
                stats = met.cost_stats(results)
                rho_knn = met.manifold_knn(results, positive_pool, mcfg.knn_k)
                rho_sphere, excluded = met.manifold_sphere(
                    results, positive_pool, mcfg.sphere_fraction, seed=mcfg.seed)
                recourse_block[key][method] = {
                    "cost_mean": stats.mean,
                    "cost_median": stats.median,
                    "cost_p90": stats.p90,
                    "low_cost_rate": met.low_cost_rate(results,
                                                       mcfg.low_cost_threshold),
                    "rho_knn": rho_knn,
                    "rho_sphere": rho_sphere,
                    "rho_sphere_excluded": excluded,
                    "failure_rate": stats.failure_rate,
                    "n_success": stats.n_success,
                    "n_total": stats.n_total,
                }
        return model_block, recourse_block

    model_block, recourse_block = stage("metrics", metrics_stage)

    report = {
        "provenance": {"config_hash": chash, "seed": cfg["seed"],
                       "generated_at": datetime.now(timezone.utc).isoformat()},
        "config": cfg,
        "vae_epoch_losses": {"first": vae_losses[0], "final": vae_losses[-1]},
        "models": model_block,
        "recourse": recourse_block,
    }

    def report_stage():
        report_path = os.path.join(out_dir, "report.json")
        with open(report_path, "w", encoding="utf-8") as fh:
            json.dump(report, fh, indent=1, sort_keys=True)
        written.append(report_path)
        csv_path = os.path.join(out_dir, "metrics.csv")
        _write_metrics_csv(report, cfg, csv_path)
        written.append(csv_path)
        for key in models:
            hist = met.Histogram(**model_block[key]["boundary_radii"])
            path = os.path.join(out_dir, f"boundary_{key}.svg")
            svg.emit_svg_histogram(hist, f"Boundary proximity: {key}", path)
            written.append(path)
        if "discovered_radii" in model_block.get("iaat", {}):
            hist = met.Histogram(**model_block["iaat"]["discovered_radii"])
            path = os.path.join(out_dir, "discovered_radii_iaat.svg")
            svg.emit_svg_histogram(hist, "Discovered per-instance radii", path)
            written.append(path)
        written.extend(figures.render_all(report, out_dir))
        manifest = os.path.join(out_dir, "MANIFEST.json")
        with open(manifest, "w", encoding="utf-8") as fh:
            json.dump({"config_hash": chash,
                       "files": sorted(os.path.basename(p) for p in written)},
                      fh, indent=1, sort_keys=True)
        written.append(manifest)
        return report_path

    stage("report", report_stage)
    return SuiteReport(report, out_dir, written)


def _write_metrics_csv(report: dict, cfg: dict, path: str) -> None:
    """One row per model x recourse method, fixed column order."""
    radii = cfg["metrics"]["asr_radii"]
    header = (["model", "regime", "epsilon", "method", "accuracy", "f1"]
              + [f"asr@{eps:g}" for eps in radii]
              + ["cost_mean_l2", "c_delta", "rho_knn", "rho_sphere", "failure_rate"])
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(header)
        for key, entry in report["models"].items():
            for method, block in report["recourse"].get(key, {}).items():
                row = [key, entry["regime"],
                       "" if entry["epsilon"] is None else entry["epsilon"],
                       method, entry["accuracy"], entry["f1_minority"]]
                row += [entry["asr_curve"][f"{eps:g}"] for eps in radii]
                row += [block["cost_mean"]["l2"], block["low_cost_rate"],
                        block["rho_knn"], block["rho_sphere"],
                        block["failure_rate"]]
                writer.writerow(row)
