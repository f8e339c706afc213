#!/usr/bin/env python3
"""Beta sweep at fixed alpha: reconstruction-fidelity direction of the trade-off.

Runs one adversarial training per beta and reports reconstruction RMSE,
action accuracy, and identity accuracy per cell. Larger beta weights the
reconstruction term more heavily, so RMSE should fall as beta rises.
Writes sweep_table.json and tradeoff.png under --out.
"""
from __future__ import annotations

import argparse
import time
from pathlib import Path

from skelanon.data import SplitPolicy, make_split
from skelanon.evaluation import select_best, sweep
from skelanon.models import ResidualAnonymizer
from skelanon.synthetic import SyntheticConfig, generate_synthetic
from skelanon.training import (
    SkeletonDataset,
    TrainConfig,
    pretrain_classifier,
    seed_everything,
)


def parse_args():
    p = argparse.ArgumentParser(description=__doc__)
    p.add_argument("--out", type=Path, default=Path("runs/tradeoff_sweep"))
    p.add_argument("--alphas", type=float, nargs="+", default=[1.0])
    p.add_argument("--betas", type=float, nargs="+", default=[5.0, 10.0, 25.0, 50.0, 75.0])
    p.add_argument("--subjects", type=int, default=8)
    p.add_argument("--actions", type=int, default=4)
    p.add_argument("--samples-per-pair", type=int, default=6)
    p.add_argument("--frames", type=int, default=16)
    p.add_argument("--noise", type=float, default=0.01)
    p.add_argument("--epochs", type=int, default=30)
    p.add_argument("--pretrain-epochs", type=int, default=800)
    p.add_argument("--channels", type=int, default=16)
    p.add_argument("--seed", type=int, default=0)
    return p.parse_args()


def main():
    args = parse_args()
    t0 = time.time()
    seed_everything(args.seed)
    samples = generate_synthetic(
        SyntheticConfig(
            n_subjects=args.subjects,
            n_actions=args.actions,
            samples_per_pair=args.samples_per_pair,
            n_frames=args.frames,
            noise=args.noise,
        ),
        seed=args.seed + 7,
    )
    split = make_split(samples, SplitPolicy.BY_CAMERA, holdout_ids=[1])
    data = SkeletonDataset.from_samples(samples)

    pre_cfg = TrainConfig(
        epochs=args.pretrain_epochs, batch_size=64, lr_classifier=0.1, seed=args.seed
    )
    train_action, _ = pretrain_classifier(data, split, "action", pre_cfg,
                                          seed=args.seed, channels=args.channels)
    train_privacy, _ = pretrain_classifier(data, split, "private", pre_cfg,
                                           seed=args.seed + 1, channels=args.channels)
    fresh_action, _ = pretrain_classifier(data, split, "action", pre_cfg,
                                          seed=args.seed + 100, channels=args.channels)
    fresh_privacy, _ = pretrain_classifier(data, split, "private", pre_cfg,
                                           seed=args.seed + 101, channels=args.channels)
    print(f"[{time.time()-t0:6.1f}s] classifiers pre-trained")

    base = TrainConfig(
        epochs=args.epochs, batch_size=32, lr_anonymizer=0.01, lr_privacy=0.01,
        seed=args.seed,
    )
    result = sweep(
        args.alphas,
        args.betas,
        data,
        split,
        base,
        lambda: ResidualAnonymizer(joint_count=data.joint_count()),
        train_action,
        train_privacy,
        fresh_action,
        fresh_privacy,
        out_dir=args.out,
    )
    for r in result.reports:
        c = r.config
        print(f"alpha={c['alpha']:<5} beta={c['beta']:<5} "
              f"rmse={r.recon_rmse:.5f} action={r.action_top1:.4f} "
              f"identity={r.privacy_top1:.4f} metric={r.selection_metric:.5f}")
    for f in result.failures:
        print(f"FAILED alpha={f['alpha']} beta={f['beta']}: {f['error']}")
    if result.reports:
        best = select_best(result.reports)
        print(f"best cell: alpha={best.config['alpha']} beta={best.config['beta']} "
              f"(metric {best.selection_metric:.5f})")
    print(f"[{time.time()-t0:6.1f}s] wrote {args.out / 'sweep_table.json'}")


if __name__ == "__main__":
    main()
