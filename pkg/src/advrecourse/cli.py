"""Command-line interface.

Subcommands: synth-data, train, attack-eval, recourse, metrics, run-suite.
Each stage consumes persisted artifacts only (CSV datasets, model JSON,
recourse JSON-lines), so recourse and metrics can be rerun without
retraining. Exit status 0 on success, 1 on runtime failure, 2 on usage
errors.
"""

from __future__ import annotations

import argparse
import json
import sys

import numpy as np

from . import metrics as met
from .data import apply_scale, fit_scale, load_csv, make_blobs, save_csv, split
from .harness import derive_seed, merge_config, run_suite
from .model import (init_classifier, init_vae, load_classifier, load_vae,
                    save_classifier, save_vae)
from .recourse import METHODS, RecourseConfig, batch_recourse, load_results, save_results
from .svg import emit_svg_histogram
from .train import (MmaConfig, TrainConfig, init_aat_state, train_iaat,
                    train_mma, train_pgd_adv, train_standard, train_vae)


def _add_split_args(p):
    p.add_argument("--test-fraction", type=float, default=0.2)
    p.add_argument("--split-seed", type=int, default=42)


def _prepare(args, scaler=None):
    """Load CSV, split deterministically, and scale consistently."""
    ds = load_csv(args.data)
    parts = split(ds, args.test_fraction, args.split_seed)
    if scaler is None:
        train_scaled = fit_scale(parts.train)
        scaler = train_scaled.scaler
    else:
        train_scaled = apply_scale(parts.train, scaler)
    return train_scaled, apply_scale(parts.test, scaler), scaler


def cmd_synth_data(args) -> int:
    ds = make_blobs(args.n_per_class, args.dim, args.separation, args.noise,
                    args.seed)
    save_csv(ds, args.out)
    print(f"wrote {ds.n} rows x {ds.d} features to {args.out}")
    return 0


def cmd_train(args) -> int:
    ds_train, _, scaler = _prepare(args)
    hidden = tuple(int(v) for v in args.hidden.split(","))
    tcfg = TrainConfig(epochs=args.epochs, batch_size=args.batch_size,
                       learning_rate=args.lr, momentum=args.momentum,
                       seed=args.seed)
    if args.regime == "vae":
        vae = init_vae(ds_train.d, args.seed, latent_dim=args.latent_dim)
        vae, losses = train_vae(vae, ds_train, tcfg, kl_weight=args.kl_weight)
        save_vae(vae, args.out)
        print(f"trained vae: first-epoch loss {losses[0]:.4f}, "
              f"final-epoch loss {losses[-1]:.4f} -> {args.out}")
        return 0
    init = init_classifier(ds_train.d, args.seed, hidden=hidden)
    if args.regime == "natural":
        model = train_standard(init, ds_train, tcfg)
    elif args.regime == "pgd":
        if args.epsilon is None:
            raise ValueError("--epsilon is required for the pgd regime")
        model = train_pgd_adv(init, ds_train, tcfg, args.epsilon)
    elif args.regime == "iaat":
        state = init_aat_state(ds_train.n)
        model, final = train_iaat(init, ds_train, tcfg, state)
        radii_path = args.radii_out or (args.out + ".radii.json")
        with open(radii_path, "w", encoding="utf-8") as fh:
            json.dump({"eps": final.eps.tolist()}, fh)
        print(f"wrote per-instance radii to {radii_path}")
    else:
        model = train_mma(init, ds_train, tcfg,
                          MmaConfig(d_max=args.d_max, beta=args.beta))
    save_classifier(model, args.out, scaler)
    print(f"trained {args.regime} model "
          f"(epsilon={model.epsilon}) -> {args.out}")
    return 0


def cmd_attack_eval(args) -> int:
    model, scaler = load_classifier(args.model)
    if scaler is None:
        raise ValueError(f"{args.model} carries no scaler; retrain with one")
    _, ds_test, _ = _prepare(args, scaler)
    radii = [float(v) for v in args.radii.split(",")]
    curve = met.asr_curve(model, ds_test, radii, steps=args.steps, seed=args.seed)
    doc = {"model": args.model, "asr": {f"{eps:g}": rate
                                        for eps, rate in curve.items()}}
    with open(args.out, "w", encoding="utf-8") as fh:
        json.dump(doc, fh, indent=1, sort_keys=True)
    for eps in radii:
        print(f"asr@{eps:g} = {curve[eps]:.4f}")
    print(f"wrote {args.out}")
    return 0


def cmd_recourse(args) -> int:
    model, scaler = load_classifier(args.model)
    if scaler is None:
        raise ValueError(f"{args.model} carries no scaler; retrain with one")
    _, ds_test, _ = _prepare(args, scaler)
    vae = load_vae(args.vae) if args.vae else None
    cfg = RecourseConfig(method=args.method, seed=args.seed)
    results = batch_recourse(model, ds_test, cfg, args.n, vae=vae)
    save_results(results, args.out)
    n_ok = sum(r.success for r in results)
    print(f"{args.method}: {n_ok}/{len(results)} successful -> {args.out}")
    return 0


def cmd_metrics(args) -> int:
    model, scaler = load_classifier(args.model)
    if scaler is None:
        raise ValueError(f"{args.model} carries no scaler; retrain with one")
    ds_train, ds_test, _ = _prepare(args, scaler)
    results = load_results(args.results)
    pool = ds_train.features[ds_train.labels == 1]
    stats = met.cost_stats(results)
    rho_sphere, excluded = met.manifold_sphere(results, pool,
                                               args.sphere_fraction,
                                               seed=args.seed)
    hist = met.boundary_histogram(model, ds_test, args.boundary_sample,
                                  seed=args.seed)
    doc = {
        "accuracy": met.accuracy(model, ds_test),
        "f1_minority": met.f1_minority(model, ds_test),
        "asr_curve": {f"{eps:g}": rate for eps, rate in
                      met.asr_curve(model, ds_test,
                                    [float(v) for v in args.radii.split(",")],
                                    seed=args.seed).items()},
        "cost_mean": stats.mean,
        "cost_median": stats.median,
        "cost_p90": stats.p90,
        "low_cost_rate": met.low_cost_rate(results, args.low_cost_threshold),
        "rho_knn": met.manifold_knn(results, pool, args.knn_k),
        "rho_sphere": rho_sphere,
        "rho_sphere_excluded": excluded,
        "failure_rate": stats.failure_rate,
        "boundary_radii": hist.to_dict(),
    }
    with open(args.out, "w", encoding="utf-8") as fh:
        json.dump(doc, fh, indent=1, sort_keys=True)
    if args.svg:
        emit_svg_histogram(hist, "Boundary proximity", args.svg)
    print(f"wrote {args.out}")
    return 0


def cmd_run_suite(args) -> int:
    overrides = {}
    if args.config:
        try:
            with open(args.config, encoding="utf-8") as fh:
                overrides = json.load(fh)
        except FileNotFoundError:
            raise FileNotFoundError(f"config file not found: {args.config}") from None
    if args.seed is not None:
        overrides["seed"] = args.seed
    merge_config(overrides)  # fail fast on invalid config
    suite = run_suite(overrides, args.out)
    print(f"suite complete: {len(suite.files)} files under {suite.out_dir}")
    print(f"report: {suite.out_dir}/report.json")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="advrecourse",
        description="Adversarial training vs. algorithmic recourse benchmark")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("synth-data", help="generate a synthetic blobs CSV")
    p.add_argument("--out", required=True)
    p.add_argument("--n-per-class", type=int, default=250)
    p.add_argument("--dim", type=int, default=2)
    p.add_argument("--separation", type=float, default=0.6)
    p.add_argument("--noise", type=float, default=0.05)
    p.add_argument("--seed", type=int, default=7)
    p.set_defaults(fn=cmd_synth_data)

    p = sub.add_parser("train", help="train one regime on a CSV dataset")
    p.add_argument("--data", required=True)
    p.add_argument("--regime", required=True,
                   choices=["natural", "pgd", "iaat", "mma", "vae"])
    p.add_argument("--epsilon", type=float, default=None)
    p.add_argument("--out", required=True)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--epochs", type=int, default=300)
    p.add_argument("--batch-size", type=int, default=64)
    p.add_argument("--lr", type=float, default=0.01)
    p.add_argument("--momentum", type=float, default=0.9)
    p.add_argument("--hidden", default="18,9,3")
    p.add_argument("--d-max", type=float, default=0.2)
    p.add_argument("--beta", type=float, default=3.0)
    p.add_argument("--latent-dim", type=int, default=None)
    p.add_argument("--kl-weight", type=float, default=0.05)
    p.add_argument("--radii-out", default=None)
    _add_split_args(p)
    p.set_defaults(fn=cmd_train)

    p = sub.add_parser("attack-eval", help="attack success rate curve")
    p.add_argument("--model", required=True)
    p.add_argument("--data", required=True)
    p.add_argument("--radii", default="0.05,0.1,0.15,0.2,0.25")
    p.add_argument("--steps", type=int, default=10)
    p.add_argument("--out", required=True)
    p.add_argument("--seed", type=int, default=0)
    _add_split_args(p)
    p.set_defaults(fn=cmd_attack_eval)

    p = sub.add_parser("recourse", help="generate counterfactuals for one method")
    p.add_argument("--model", required=True)
    p.add_argument("--data", required=True)
    p.add_argument("--method", required=True, choices=list(METHODS))
    p.add_argument("--n", type=int, default=1000)
    p.add_argument("--vae", default=None)
    p.add_argument("--out", required=True)
    p.add_argument("--seed", type=int, default=0)
    _add_split_args(p)
    p.set_defaults(fn=cmd_recourse)

    p = sub.add_parser("metrics", help="metrics from stored recourse results")
    p.add_argument("--model", required=True)
    p.add_argument("--data", required=True)
    p.add_argument("--results", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--svg", default=None)
    p.add_argument("--radii", default="0.05,0.1,0.15,0.2,0.25")
    p.add_argument("--low-cost-threshold", type=float, default=0.05)
    p.add_argument("--knn-k", type=int, default=5)
    p.add_argument("--sphere-fraction", type=float, default=0.2)
    p.add_argument("--boundary-sample", type=int, default=200)
    p.add_argument("--seed", type=int, default=0)
    _add_split_args(p)
    p.set_defaults(fn=cmd_metrics)

    p = sub.add_parser("run-suite", help="full 7-model x 3-method pipeline")
    p.add_argument("--config", default=None)
    p.add_argument("--out", default="out")
    p.add_argument("--seed", type=int, default=None)
    p.set_defaults(fn=cmd_run_suite)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.fn(args)
    except Exception as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


def entry() -> None:
    sys.exit(main())


if __name__ == "__main__":
    entry()
