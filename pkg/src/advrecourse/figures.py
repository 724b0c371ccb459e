"""Matplotlib comparison figures rendered by the suite's report stage.

Each helper takes the assembled report dictionary (the same structure that
lands in report.json) and writes one PNG. Model order follows the report.
"""

from __future__ import annotations

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np

METHOD_COLORS = {"growing_spheres": "#0C5DA5", "scfe": "#00A08A", "cchvae": "#F2AD00"}


def _model_keys(report: dict) -> list[str]:
    return list(report["models"].keys())


def _save(fig, path: str) -> str:
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)
    return path


def standard_performance(report: dict, path: str) -> str:
    """Grouped bars of accuracy and minority-class F1 per model."""
    keys = _model_keys(report)
    acc = [report["models"][k]["accuracy"] for k in keys]
    f1 = [report["models"][k]["f1_minority"] for k in keys]
    x = np.arange(len(keys))
    fig, ax = plt.subplots(figsize=(8, 4))
    ax.bar(x - 0.2, acc, width=0.4, label="accuracy", color="#4878a8")
    ax.bar(x + 0.2, f1, width=0.4, label="minority F1", color="#a8c8e8")
    ax.set_xticks(x, keys, rotation=30, ha="right")
    ax.set_ylim(0, 1.05)
    ax.set_title("Standard performance")
    ax.legend()
    return _save(fig, path)


def robustness_curves(report: dict, path: str) -> str:
    """Attack success rate against attack radius, one curve per model."""
    fig, ax = plt.subplots(figsize=(8, 4))
    for key in _model_keys(report):
        curve = {float(r): v for r, v in report["models"][key]["asr_curve"].items()}
        radii = sorted(curve)
        ax.plot(radii, [curve[r] for r in radii], marker="o", label=key)
    ax.set_xlabel("attack radius")
    ax.set_ylabel("attack success rate")
    ax.set_ylim(-0.02, 1.02)
    ax.set_title("Robustness under PGD attack")
    ax.legend(fontsize=8)
    return _save(fig, path)


def recourse_costs(report: dict, path: str) -> str:
    """Mean l2 recourse cost per model, grouped by recourse method."""
    keys = _model_keys(report)
    methods = sorted({m for k in keys for m in report["recourse"].get(k, {})})
    x = np.arange(len(keys))
    width = 0.8 / max(len(methods), 1)
    fig, ax = plt.subplots(figsize=(8, 4))
    for j, method in enumerate(methods):
        vals = [report["recourse"][k][method]["cost_mean"]["l2"]
                if method in report["recourse"].get(k, {}) else np.nan
                for k in keys]
        ax.bar(x + (j - (len(methods) - 1) / 2) * width, vals, width=width,
               label=method, color=METHOD_COLORS.get(method))
    ax.set_xticks(x, keys, rotation=30, ha="right")
    ax.set_ylabel("mean l2 cost")
    ax.set_title("Recourse costs")
    ax.legend(fontsize=8)
    return _save(fig, path)


def low_cost_rates(report: dict, path: str) -> str:
    """Share of low-cost recourse per model and method."""
    keys = _model_keys(report)
    methods = sorted({m for k in keys for m in report["recourse"].get(k, {})})
    x = np.arange(len(keys))
    width = 0.8 / max(len(methods), 1)
    fig, ax = plt.subplots(figsize=(8, 4))
    for j, method in enumerate(methods):
        vals = [report["recourse"][k][method]["low_cost_rate"]
                if method in report["recourse"].get(k, {}) else np.nan
                for k in keys]
        ax.bar(x + (j - (len(methods) - 1) / 2) * width, vals, width=width,
               label=method, color=METHOD_COLORS.get(method))
    ax.set_xticks(x, keys, rotation=30, ha="right")
    ax.set_ylim(0, 1.05)
    ax.set_ylabel("low-cost share")
    ax.set_title("Low-cost recourse")
    ax.legend(fontsize=8)
    return _save(fig, path)


def manifold_proximity(report: dict, path: str) -> str:
    """KNN and sphere proximity of counterfactuals to the positive pool."""
    keys = _model_keys(report)
    methods = sorted({m for k in keys for m in report["recourse"].get(k, {})})
    fig, axes = plt.subplots(1, 2, figsize=(11, 4), sharex=True)
    for ax, field, label in zip(axes, ("rho_knn", "rho_sphere"),
                                ("KNN proximity", "sphere proximity")):
        x = np.arange(len(keys))
        width = 0.8 / max(len(methods), 1)
        for j, method in enumerate(methods):
            vals = [report["recourse"][k][method][field]
                    if method in report["recourse"].get(k, {}) else np.nan
                    for k in keys]
            ax.bar(x + (j - (len(methods) - 1) / 2) * width, vals, width=width,
                   label=method, color=METHOD_COLORS.get(method))
        ax.set_xticks(x, keys, rotation=30, ha="right")
        ax.set_title(label)
    axes[0].legend(fontsize=8)
    return _save(fig, path)


def render_all(report: dict, out_dir: str) -> list[str]:
    import os

    written = [
        standard_performance(report, os.path.join(out_dir, "standard_performance.png")),
        robustness_curves(report, os.path.join(out_dir, "attack_success.png")),
    ]
    if report.get("recourse"):
        written.extend([
            recourse_costs(report, os.path.join(out_dir, "recourse_costs.png")),
            low_cost_rates(report, os.path.join(out_dir, "low_cost_recourse.png")),
            manifold_proximity(report, os.path.join(out_dir, "manifold_proximity.png")),
        ])
    return written
