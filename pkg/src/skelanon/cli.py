"""Command-line entry point.

Subcommands: ingest, audit, pretrain, anontrain, apply, eval, sweep, render.
Every run writes a resolved-config snapshot under its output directory so it
is self-describing; timestamps are confined to `run_meta.json`.  Option
precedence is flag > config file (`--config`, YAML) > built-in default, and
the resolved snapshot records the value actually used.

Environment:
  SKELANON_OUTPUT_ROOT    default parent for relative --out paths
  SKELANON_DETERMINISTIC  "0" disables deterministic mode (default on)
"""
from __future__ import annotations

import argparse
import json
import os
import sys
import time
from pathlib import Path

import numpy as np
import torch
import yaml

from . import data as data_mod
from . import synthetic as synth_mod
from .errors import MalformedFile, SkelAnonError
from .evaluation import audit_leakage, evaluate_anonymizer, sweep
from .losses import LossWeights
from .models import ResidualAnonymizer, UNetAnonymizer, build_from_params, save_params
from .render import RenderSpec, render_pair
from .training import (
    SkeletonDataset,
    TrainConfig,
    adversarial_train,
    apply_anonymizer,
    pretrain_classifier,
    save_checkpoint,
    seed_everything,
)

COMMON_DEFAULTS = {
    "epochs": 400,
    "batch_size": 64,
    "lr": 0.1,
    "seed": 0,
    "policy": "by_camera",
    "holdout": "1",
    "subjects": 8,
    "actions": 4,
    "samples_per_pair": 8,
    "frames": 16,
    "noise": 0.01,
    "data_seed": 7,
}


def _out_root() -> Path:
    return Path(os.environ.get("SKELANON_OUTPUT_ROOT", "."))


def _deterministic_default() -> bool:
    return os.environ.get("SKELANON_DETERMINISTIC", "1") != "0"


def _resolve(args: argparse.Namespace, defaults: dict) -> dict:
    """flag > config-file > default; None-valued flags fall through."""
    resolved = dict(defaults)
    cfg_path = getattr(args, "config", None)
    if cfg_path:
        loaded = yaml.safe_load(Path(cfg_path).read_text()) or {}
        for key, value in loaded.items():
            if key in resolved:
                resolved[key] = value
    for key in resolved:
        flag = getattr(args, key, None)
        if flag is not None:
            resolved[key] = flag
    return resolved


def _write_run_files(out_dir: Path, resolved: dict, command: str):
    out_dir.mkdir(parents=True, exist_ok=True)
    snapshot = {"command": command, "resolved_options": resolved,
                "precedence": "flag > config > default"}
    (out_dir / "resolved_config.json").write_text(
        json.dumps(snapshot, indent=2, sort_keys=True, default=str) + "\n"
    )
    (out_dir / "run_meta.json").write_text(
        json.dumps({"written_at": time.strftime("%Y-%m-%dT%H:%M:%S")}) + "\n"
    )


def _out_path(raw: str) -> Path:
    path = Path(raw)
    return path if path.is_absolute() else _out_root() / path


def _load_dataset(resolved: dict, args) -> SkeletonDataset:
    if getattr(args, "store", None):
        samples = data_mod.load_store(args.store)
    else:
        cfg = synth_mod.SyntheticConfig(
            n_subjects=int(resolved["subjects"]),
            n_actions=int(resolved["actions"]),
            samples_per_pair=int(resolved["samples_per_pair"]),
            n_frames=int(resolved["frames"]),
            noise=float(resolved["noise"]),
        )
        samples = synth_mod.generate_synthetic(cfg, int(resolved["data_seed"]))
    return SkeletonDataset.from_samples(samples)


def _make_split(dataset: SkeletonDataset, resolved: dict):
    policy = data_mod.SplitPolicy(resolved["policy"])
    holdout = [int(t) for t in str(resolved["holdout"]).split(",") if t != ""]
    samples = dataset.to_samples()
    return data_mod.make_split(samples, policy, holdout)


def _train_config(resolved: dict, **overrides) -> TrainConfig:
    cfg = TrainConfig(
        epochs=int(resolved["epochs"]),
        batch_size=int(resolved["batch_size"]),
        lr_classifier=float(resolved["lr"]),
        seed=int(resolved["seed"]),
    )
    for key, value in overrides.items():
        setattr(cfg, key, value)
    return cfg


def _add_dataset_flags(p: argparse.ArgumentParser):
    p.add_argument("--store", help="tensor-store directory (default: synthetic data)")
    p.add_argument("--subjects", type=int)
    p.add_argument("--actions", type=int)
    p.add_argument("--samples-per-pair", type=int, dest="samples_per_pair")
    p.add_argument("--frames", type=int)
    p.add_argument("--noise", type=float)
    p.add_argument("--data-seed", type=int, dest="data_seed")
    p.add_argument("--policy", choices=["by_subject", "by_camera"])
    p.add_argument("--holdout", help="comma-separated held-out subject/camera ids")


def _add_train_flags(p: argparse.ArgumentParser):
    p.add_argument("--epochs", type=int)
    p.add_argument("--batch-size", type=int, dest="batch_size")
    p.add_argument("--lr", type=float)
    p.add_argument("--seed", type=int)


def _add_common(p: argparse.ArgumentParser):
    p.add_argument("--config", help="YAML config file; flags override its keys")
    p.add_argument("--out", required=True, help="output directory (or file for pretrain)")
    det = p.add_mutually_exclusive_group()
    det.add_argument("--deterministic", dest="deterministic", action="store_true", default=None)
    det.add_argument("--no-deterministic", dest="deterministic", action="store_false")


# --------------------------------------------------------------------------
# Subcommand implementations


def cmd_ingest(args) -> int:
    resolved = _resolve(args, {**COMMON_DEFAULTS, "target_frames": 64, "center": True})
    out = _out_path(args.out)
    in_dir = Path(args.input)
    if not in_dir.is_dir():
        print(f"error: input directory {in_dir} does not exist", file=sys.stderr)
        return 2
    samples, errors = [], []
    for path in sorted(in_dir.glob("*.skeleton")):
        meta = data_mod.parse_clip_name(path.stem) or {}
        try:
            bodies = data_mod.parse_skeleton_file(path.read_text())
        except MalformedFile as err:
            errors.append({"file": path.name, "error": str(err)})
            continue
        samples.append(
            data_mod.LabeledSample(
                sequence=bodies[0][1] if bodies else data_mod.SkeletonSequence(
                    np.zeros((0, data_mod.NUM_JOINTS, 3), dtype=np.float32)
                ),
                action=meta.get("action", 0),
                private=meta.get("subject", 0),
                subject_id=meta.get("subject", 0),
                camera_id=meta.get("camera", 0),
                n_bodies=len(bodies),
                sample_id=path.stem,
            )
        )
    kept, drops = data_mod.filter_samples(samples)
    processed = []
    for sample in kept:
        seq = sample.sequence
        if resolved["center"]:
            seq = data_mod.center_normalize(seq)
        seq = data_mod.resample_frames(seq, int(resolved["target_frames"]))
        processed.append(
            data_mod.LabeledSample(
                sequence=seq, action=sample.action, private=sample.private,
                subject_id=sample.subject_id, camera_id=sample.camera_id,
                sample_id=sample.sample_id,
            )
        )
    _write_run_files(out, resolved, "ingest")
    (out / "ingest_report.json").write_text(
        json.dumps({"ingested": len(processed), "dropped": dict(drops),
                    "errors": errors}, indent=2, sort_keys=True) + "\n"
    )
    if not processed:
        print("error: no valid samples ingested", file=sys.stderr)
        return 1
    data_mod.save_store(processed, out / "store")
    if errors and args.strict:
        print(f"error: {len(errors)} malformed file(s); see ingest_report.json", file=sys.stderr)
        return 1
    print(f"ingested {len(processed)} samples into {out / 'store'}")
    return 0


def cmd_audit(args) -> int:
    resolved = _resolve(args, {**COMMON_DEFAULTS, "label": "private", "seeds": 3})
    out = _out_path(args.out)
    seed_everything(int(resolved["seed"]), args.deterministic if args.deterministic is not None else _deterministic_default())
    dataset = _load_dataset(resolved, args)
    split = _make_split(dataset, resolved)
    result = audit_leakage(
        dataset, split, resolved["label"], _train_config(resolved),
        n_seeds=int(resolved["seeds"]), base_seed=int(resolved["seed"]),
        shuffle_labels=bool(args.shuffle_labels),
    )
    _write_run_files(out, resolved, "audit")
    payload = result.to_dict()
    if int(resolved["seeds"]) == 1:
        payload.pop("std_top1")
        payload.pop("std_top5")
    (out / "audit_report.json").write_text(json.dumps(payload, indent=2, sort_keys=True) + "\n")
    print(f"{resolved['label']} leakage: mean top-1 {result.mean_top1:.4f} "
          f"(chance {result.chance:.4f})")
    return 0


def cmd_pretrain(args) -> int:
    resolved = _resolve(args, {**COMMON_DEFAULTS, "label": "private"})
    out = _out_path(args.out)
    seed_everything(int(resolved["seed"]), args.deterministic if args.deterministic is not None else _deterministic_default())
    dataset = _load_dataset(resolved, args)
    split = _make_split(dataset, resolved)
    model, history = pretrain_classifier(
        dataset, split, resolved["label"], _train_config(resolved)
    )
    _write_run_files(out, resolved, "pretrain")
    save_params(model, out / f"{resolved['label']}.params")
    (out / "pretrain_history.json").write_text(json.dumps(history, indent=2, sort_keys=True) + "\n")
    print(f"pretrained {resolved['label']} classifier: val acc {history['val_acc']:.4f}")
    return 0


def _make_anonymizer(variant: str, joint_count: int):
    if variant == "residual_mlp":
        return ResidualAnonymizer(joint_count=joint_count)
    if variant == "unet":
        return UNetAnonymizer(joint_count=joint_count)
    raise SkelAnonError(f"unknown anonymizer variant {variant!r}")


def cmd_anontrain(args) -> int:
    resolved = _resolve(args, {
        **COMMON_DEFAULTS, "alpha": 1.0, "beta": 10.0, "k": 1,
        "lr_anonymizer": 0.01, "lr_privacy": 0.01, "variant": "residual_mlp",
        "epochs": 50,
    })
    out = _out_path(args.out)
    seed_everything(int(resolved["seed"]), args.deterministic if args.deterministic is not None else _deterministic_default())
    dataset = _load_dataset(resolved, args)
    split = _make_split(dataset, resolved)
    action_clf = build_from_params(args.action_params, topology=dataset.topology)
    privacy_clf = build_from_params(args.privacy_params, topology=dataset.topology)
    config = _train_config(
        resolved,
        k=int(resolved["k"]),
        lr_anonymizer=float(resolved["lr_anonymizer"]),
        lr_privacy=float(resolved["lr_privacy"]),
        weights=LossWeights(alpha=float(resolved["alpha"]), beta=float(resolved["beta"])),
    )
    seed_everything(config.seed)
    anonymizer = _make_anonymizer(resolved["variant"], dataset.joint_count())
    trace = adversarial_train(anonymizer, privacy_clf, action_clf, dataset, split, config)
    _write_run_files(out, resolved, "anontrain")
    save_checkpoint(out, anonymizer, privacy_clf, action_clf, trace, config)
    last = trace.records[-1]
    print(f"trained anonymizer: val action {last['val_action_acc']:.4f}, "
          f"val privacy {last['val_privacy_acc']:.4f}, rmse {last['recon_rmse']:.5f}")
    return 0


def cmd_apply(args) -> int:
    resolved = _resolve(args, dict(COMMON_DEFAULTS))
    out = _out_path(args.out)
    dataset = _load_dataset(resolved, args)
    anonymizer = build_from_params(args.anonymizer_params, joint_count=dataset.joint_count())
    anonymized = apply_anonymizer(anonymizer, dataset)
    _write_run_files(out, resolved, "apply")
    data_mod.save_store(anonymized.to_samples(), out / "store")
    print(f"anonymized {len(anonymized)} samples into {out / 'store'}")
    return 0


def cmd_eval(args) -> int:
    resolved = _resolve(args, dict(COMMON_DEFAULTS))
    out = _out_path(args.out)
    dataset = _load_dataset(resolved, args)
    split = _make_split(dataset, resolved)
    anonymizer = build_from_params(args.anonymizer_params, joint_count=dataset.joint_count())
    action_clf = build_from_params(args.action_params, topology=dataset.topology)
    privacy_clf = build_from_params(args.privacy_params, topology=dataset.topology)
    report = evaluate_anonymizer(
        anonymizer, dataset, split, action_clf, privacy_clf,
        config_snapshot={"anonymizer": str(args.anonymizer_params)},
    )
    _write_run_files(out, resolved, "eval")
    (out / "eval_report.json").write_text(json.dumps(report.to_dict(), indent=2, sort_keys=True) + "\n")
    print(f"action {report.action_top1:.4f}, privacy {report.privacy_top1:.4f}, "
          f"selection metric {report.selection_metric:.5f}")
    return 0


def cmd_sweep(args) -> int:
    resolved = _resolve(args, {
        **COMMON_DEFAULTS, "alphas": "1.0", "betas": "5,10,25,50,75",
        "k": 1, "lr_anonymizer": 0.01, "lr_privacy": 0.01,
        "variant": "residual_mlp", "epochs": 30,
    })
    out = _out_path(args.out)
    seed_everything(int(resolved["seed"]), args.deterministic if args.deterministic is not None else _deterministic_default())
    dataset = _load_dataset(resolved, args)
    split = _make_split(dataset, resolved)
    base = _train_config(
        resolved,
        k=int(resolved["k"]),
        lr_anonymizer=float(resolved["lr_anonymizer"]),
        lr_privacy=float(resolved["lr_privacy"]),
    )
    train_action, _ = pretrain_classifier(dataset, split, "action", base, seed=base.seed)
    train_privacy, _ = pretrain_classifier(dataset, split, "private", base, seed=base.seed + 1)
    fresh_action, _ = pretrain_classifier(dataset, split, "action", base, seed=base.seed + 100)
    fresh_privacy, _ = pretrain_classifier(dataset, split, "private", base, seed=base.seed + 101)
    alphas = [float(t) for t in str(resolved["alphas"]).split(",") if t]
    betas = [float(t) for t in str(resolved["betas"]).split(",") if t]
    variant = resolved["variant"]
    result = sweep(
        alphas, betas, dataset, split, base,
        lambda: _make_anonymizer(variant, dataset.joint_count()),
        train_action, train_privacy, fresh_action, fresh_privacy,
        out_dir=out,
    )
    _write_run_files(out, resolved, "sweep")
    print(f"sweep finished: {len(result.reports)} cells, {len(result.failures)} failures")
    return 0 if not result.failures else 1


def cmd_render(args) -> int:
    resolved = _resolve(args, dict(COMMON_DEFAULTS))
    out = _out_path(args.out)
    original = {s.sample_id: s for s in data_mod.load_store(args.original_store)}
    anonymized = {s.sample_id: s for s in data_mod.load_store(args.anonymized_store)}
    sample_id = args.sample_id or next(iter(original))
    if sample_id not in original or sample_id not in anonymized:
        print(f"error: sample {sample_id!r} not present in both stores", file=sys.stderr)
        return 2
    indices = [int(t) for t in args.frames.split(",")] if args.frames else None
    _write_run_files(out, resolved, "render")
    path = render_pair(
        original[sample_id].sequence,
        anonymized[sample_id].sequence,
        RenderSpec(frame_indices=indices),
        out,
        name=f"{sample_id}_pair",
    )
    print(f"wrote {path}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="skelanon",
        description="Audit and remove private information from skeleton action data.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("ingest", help="parse raw .skeleton files into a tensor store")
    _add_common(p)
    p.add_argument("--input", required=True, help="directory of .skeleton files")
    p.add_argument("--strict", action="store_true", help="nonzero exit on any malformed file")
    p.add_argument("--target-frames", type=int, dest="target_frames")
    p.set_defaults(func=cmd_ingest)

    p = sub.add_parser("audit", help="measure privacy leakage with fresh classifiers")
    _add_common(p)
    _add_dataset_flags(p)
    _add_train_flags(p)
    p.add_argument("--label", choices=["action", "private"])
    p.add_argument("--seeds", type=int, help="number of audit seeds")
    p.add_argument("--shuffle-labels", action="store_true", help="permutation-null control")
    p.set_defaults(func=cmd_audit)

    p = sub.add_parser("pretrain", help="pre-train a classifier on raw data")
    _add_common(p)
    _add_dataset_flags(p)
    _add_train_flags(p)
    p.add_argument("--label", choices=["action", "private"])
    p.set_defaults(func=cmd_pretrain)

    p = sub.add_parser("anontrain", help="run the alternating adversarial optimization")
    _add_common(p)
    _add_dataset_flags(p)
    _add_train_flags(p)
    p.add_argument("--action-params", required=True, dest="action_params")
    p.add_argument("--privacy-params", required=True, dest="privacy_params")
    p.add_argument("--alpha", type=float)
    p.add_argument("--beta", type=float)
    p.add_argument("--k", type=int)
    p.add_argument("--lr-anonymizer", type=float, dest="lr_anonymizer")
    p.add_argument("--lr-privacy", type=float, dest="lr_privacy")
    p.add_argument("--variant", choices=["residual_mlp", "unet"])
    p.set_defaults(func=cmd_anontrain)

    p = sub.add_parser("apply", help="anonymize a dataset with trained parameters")
    _add_common(p)
    _add_dataset_flags(p)
    p.add_argument("--anonymizer-params", required=True, dest="anonymizer_params")
    p.set_defaults(func=cmd_apply)

    p = sub.add_parser("eval", help="score fresh classifiers on anonymized data")
    _add_common(p)
    _add_dataset_flags(p)
    p.add_argument("--anonymizer-params", required=True, dest="anonymizer_params")
    p.add_argument("--action-params", required=True, dest="action_params")
    p.add_argument("--privacy-params", required=True, dest="privacy_params")
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("sweep", help="grid over (alpha, beta) with one run per cell")
    _add_common(p)
    _add_dataset_flags(p)
    _add_train_flags(p)
    p.add_argument("--alphas", help="comma-separated alpha grid")
    p.add_argument("--betas", help="comma-separated beta grid")
    p.add_argument("--k", type=int)
    p.add_argument("--lr-anonymizer", type=float, dest="lr_anonymizer")
    p.add_argument("--lr-privacy", type=float, dest="lr_privacy")
    p.add_argument("--variant", choices=["residual_mlp", "unet"])
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("render", help="before/after frame comparison figure")
    _add_common(p)
    p.add_argument("--original-store", required=True, dest="original_store")
    p.add_argument("--anonymized-store", required=True, dest="anonymized_store")
    p.add_argument("--sample-id", dest="sample_id")
    p.add_argument("--frames", help="comma-separated frame indices (default: 5 uniform)")
    p.set_defaults(func=cmd_render)

    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except SkelAnonError as err:
        print(f"error: {err}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
