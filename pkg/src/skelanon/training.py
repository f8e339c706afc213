"""Classifier pre-training and the alternating adversarial loop.

The adversarial loop alternates k anonymizer (theta) steps against one privacy
classifier (phi) step per round, each on a freshly sampled minibatch, with the
action classifier (psi) frozen throughout.  One epoch is ceil(n_train / m)
rounds, so after n rounds the update counters are exactly theta = k * n and
phi = n.  Both classifiers start from pre-trained parameters; the privacy
classifier is warm-started, not reinitialized.
"""
from __future__ import annotations

import hashlib
import json
import math
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Sequence

import numpy as np
import torch

from .data import DatasetSplit, LabeledSample, SkeletonSequence
from .errors import NonFiniteLoss
from .losses import LossWeights, cross_entropy, maximization_loss, minimization_loss, reconstruction_error
from .models import make_classifier, save_params

ACTION = "action"
PRIVATE = "private"


def seed_everything(seed: int, deterministic: bool = True):
    """Reset all RNG state; deterministic mode also pins the thread count."""
    torch.manual_seed(seed)
    np.random.seed(seed % 2**32)
    if deterministic:
        torch.set_num_threads(1)
        torch.use_deterministic_algorithms(True)


@dataclass
class SkeletonDataset:
    """Dense tensor view of a sample list, shared by training and evaluation."""

    x: torch.Tensor  # (N, T, D, 3) float32
    actions: torch.Tensor  # (N,) long
    privates: torch.Tensor  # (N,) long
    subject_ids: np.ndarray
    camera_ids: np.ndarray
    topology: list[tuple[int, int]]
    sample_ids: list[str]

    @classmethod
    def from_samples(cls, samples: Sequence[LabeledSample]) -> "SkeletonDataset":
        if not samples:
            raise ValueError("empty sample list")
        x = torch.from_numpy(np.stack([s.sequence.coords for s in samples]))
        return cls(
            x=x,
            actions=torch.tensor([s.action for s in samples], dtype=torch.long),
            privates=torch.tensor([s.private for s in samples], dtype=torch.long),
            subject_ids=np.array([s.subject_id for s in samples]),
            camera_ids=np.array([s.camera_id for s in samples]),
            topology=list(samples[0].sequence.topology),
            sample_ids=[s.sample_id or f"sample{i:05d}" for i, s in enumerate(samples)],
        )

    def to_samples(self) -> list[LabeledSample]:
        coords = self.x.numpy()
        out = []
        for i in range(len(self.sample_ids)):
            seq = SkeletonSequence(
                coords[i], joint_count=coords.shape[2], topology=self.topology
            )
            out.append(
                LabeledSample(
                    sequence=seq,
                    action=int(self.actions[i]),
                    private=int(self.privates[i]),
                    subject_id=int(self.subject_ids[i]),
                    camera_id=int(self.camera_ids[i]),
                    sample_id=self.sample_ids[i],
                )
            )
        return out

    def __len__(self) -> int:
        return self.x.shape[0]

    def joint_count(self) -> int:
        return self.x.shape[2]

    def labels(self, kind: str) -> torch.Tensor:
        if kind == ACTION:
            return self.actions
        if kind == PRIVATE:
            return self.privates
        raise ValueError(f"label kind must be {ACTION!r} or {PRIVATE!r}, got {kind!r}")

    def n_classes(self, kind: str) -> int:
        return int(self.labels(kind).max()) + 1


@dataclass
class TrainConfig:
    epochs: int = 50
    batch_size: int = 32
    k: int = 1  # minimization steps per maximization step
    lr_anonymizer: float = 0.01
    lr_privacy: float = 0.01
    lr_classifier: float = 0.05  # used by pre-training
    weights: LossWeights = field(default_factory=LossWeights)
    seed: int = 0
    optimizer: str = "sgd_momentum"
    momentum: float = 0.9
    early_stop_patience: int | None = None
    # Pre-training uses plain SGD: with momentum 0.9 the classifier routinely
    # collapses to constant logits on the synthetic corpus.  The adversarial
    # loop keeps `momentum`.
    pretrain_momentum: float = 0.0
    # Pre-training only: one step decay of lr_classifier partway through the
    # budget (lr_decay=1 disables it).  Late-phase gradient noise otherwise
    # keeps the classifier oscillating around the optimum on fine-grained
    # label structure such as the identity scale ladder.
    lr_decay: float = 0.1
    lr_decay_at: float = 0.5

    def __post_init__(self):
        if self.epochs < 1 or self.batch_size < 1 or self.k < 1:
            raise ValueError("epochs, batch_size, and k must all be >= 1")
        for name in ("lr_anonymizer", "lr_privacy", "lr_classifier"):
            if getattr(self, name) <= 0:
                raise ValueError(f"{name} must be positive")
        if not (0.0 < self.lr_decay <= 1.0):
            raise ValueError("lr_decay must be in (0, 1]")
        if not (0.0 < self.lr_decay_at <= 1.0):
            raise ValueError("lr_decay_at must be in (0, 1]")
        if self.optimizer != "sgd_momentum":
            raise ValueError(f"unsupported optimizer {self.optimizer!r}")


@dataclass
class TrainTrace:
    records: list[dict] = field(default_factory=list)

    @property
    def theta_updates(self) -> int:
        return self.records[-1]["theta_updates"] if self.records else 0

    @property
    def phi_updates(self) -> int:
        return self.records[-1]["phi_updates"] if self.records else 0

    def save(self, path: str | Path):
        with open(path, "w") as fh:
            for record in self.records:
                fh.write(json.dumps(record, sort_keys=True) + "\n")

    @classmethod
    def load(cls, path: str | Path) -> "TrainTrace":
        records = [json.loads(line) for line in Path(path).read_text().splitlines() if line]
        return cls(records)


def state_hash(module: torch.nn.Module) -> str:
    """SHA-256 over the serialized parameter tensors, for isolation checks."""
    digest = hashlib.sha256()
    for name, tensor in sorted(module.state_dict().items()):
        digest.update(name.encode())
        digest.update(tensor.detach().cpu().numpy().tobytes())
    return digest.hexdigest()


@torch.no_grad()
def accuracy(model: torch.nn.Module, x: torch.Tensor, labels: torch.Tensor, top_k: int = 1,
             batch_size: int = 256) -> float:
    model.eval()
    hits = 0
    for start in range(0, x.shape[0], batch_size):
        logits = model(x[start : start + batch_size])
        top = logits.topk(min(top_k, logits.shape[1]), dim=1).indices
        hits += (top == labels[start : start + batch_size, None]).any(dim=1).sum().item()
    return hits / x.shape[0]


def _check_finite(loss: torch.Tensor, step: int):
    if not torch.isfinite(loss):
        raise NonFiniteLoss(f"non-finite loss at step {step}", step=step)


def pretrain_classifier(
    data: SkeletonDataset,
    split: DatasetSplit,
    label_kind: str,
    config: TrainConfig,
    backbone: str = "toy_gcn",
    seed: int | None = None,
    **backbone_kwargs,
) -> tuple[torch.nn.Module, dict]:
    """Minibatch SGD on cross-entropy over raw data; returns (model, history)."""
    seed = config.seed if seed is None else seed
    seed_everything(seed)
    labels = data.labels(label_kind)
    model = make_classifier(
        backbone,
        data.n_classes(label_kind),
        data.topology,
        joint_count=data.joint_count(),
        **backbone_kwargs,
    )
    train_x = data.x[torch.tensor(split.train_indices, dtype=torch.long)]
    if hasattr(model, "set_input_stats"):
        model.set_input_stats(train_x.mean().item(), train_x.std().item())
    opt = torch.optim.SGD(model.parameters(), lr=config.lr_classifier, momentum=config.pretrain_momentum)
    gen = torch.Generator().manual_seed(seed)
    train_idx = torch.tensor(split.train_indices, dtype=torch.long)
    steps_per_epoch = math.ceil(len(train_idx) / config.batch_size)
    total_steps = config.epochs * steps_per_epoch
    decay_step = int(total_steps * config.lr_decay_at)
    step = 0
    for _ in range(config.epochs):
        perm = train_idx[torch.randperm(len(train_idx), generator=gen)]
        model.train()
        for start in range(0, len(perm), config.batch_size):
            if config.lr_decay < 1.0 and step == decay_step:
                for group in opt.param_groups:
                    group["lr"] = config.lr_classifier * config.lr_decay
            batch = perm[start : start + config.batch_size]
            opt.zero_grad()
            loss = cross_entropy(model(data.x[batch]), labels[batch])
            _check_finite(loss, step)
            loss.backward()
            opt.step()
            step += 1
    val_idx = torch.tensor(split.val_indices, dtype=torch.long)
    history = {
        "train_acc": accuracy(model, data.x[train_idx], labels[train_idx]),
        "val_acc": accuracy(model, data.x[val_idx], labels[val_idx]),
        "steps": step,
        "seed": seed,
        "label_kind": label_kind,
    }
    return model, history


def adversarial_train(
    anonymizer: torch.nn.Module,
    privacy_classifier: torch.nn.Module,
    action_classifier: torch.nn.Module,
    data: SkeletonDataset,
    split: DatasetSplit,
    config: TrainConfig,
) -> TrainTrace:
    """Alternating minimax optimization; mutates anonymizer and privacy classifier.

    The action classifier is frozen: its parameters are bit-identical before
    and after (asserted by hash).  Raises NonFiniteLoss on divergence with the
    trace accumulated so far attached.
    """
    seed_everything(config.seed)
    frozen_hash = state_hash(action_classifier)
    for p in action_classifier.parameters():
        p.requires_grad_(False)
    action_classifier.eval()

    opt_theta = torch.optim.SGD(
        anonymizer.parameters(), lr=config.lr_anonymizer, momentum=config.momentum
    )
    opt_phi = torch.optim.SGD(
        privacy_classifier.parameters(), lr=config.lr_privacy, momentum=config.momentum
    )
    gen = torch.Generator().manual_seed(config.seed)
    train_idx = torch.tensor(split.train_indices, dtype=torch.long)
    val_idx = torch.tensor(split.val_indices, dtype=torch.long)
    rounds_per_epoch = math.ceil(len(train_idx) / config.batch_size)
    trace = TrainTrace()
    theta_updates = phi_updates = 0
    best_metric, stall = -1.0, 0

    def fresh_batch() -> torch.Tensor:
        pick = torch.randint(len(train_idx), (min(config.batch_size, len(train_idx)),), generator=gen)
        return train_idx[pick]

    def set_requires_grad(module: torch.nn.Module, flag: bool):
        for p in module.parameters():
            p.requires_grad_(flag)

    for epoch in range(config.epochs):
        anonymizer.train()
        privacy_classifier.train()
        min_loss_val = max_loss_val = float("nan")
        for _ in range(rounds_per_epoch):
            set_requires_grad(privacy_classifier, False)
            for _ in range(config.k):
                batch = fresh_batch()
                opt_theta.zero_grad()
                loss = minimization_loss(
                    data.x[batch],
                    data.actions[batch],
                    anonymizer,
                    privacy_classifier,
                    action_classifier,
                    config.weights,
                )
                try:
                    _check_finite(loss, theta_updates)
                except NonFiniteLoss as err:
                    err.trace = trace
                    raise
                loss.backward()
                opt_theta.step()
                theta_updates += 1
                min_loss_val = float(loss.detach())
            set_requires_grad(privacy_classifier, True)
            set_requires_grad(anonymizer, False)
            batch = fresh_batch()
            opt_phi.zero_grad()
            loss = maximization_loss(
                data.x[batch],
                data.privates[batch],
                anonymizer,
                privacy_classifier,
                config.weights.alpha,
            )
            try:
                _check_finite(loss, phi_updates)
            except NonFiniteLoss as err:
                err.trace = trace
                raise
            loss.backward()
            opt_phi.step()
            phi_updates += 1
            max_loss_val = float(loss.detach())
            set_requires_grad(anonymizer, True)

        with torch.no_grad():
            anonymizer.eval()
            x_anon_train = _apply_batched(anonymizer, data.x[train_idx])
            x_anon_val = _apply_batched(anonymizer, data.x[val_idx])
            _, rmse = reconstruction_error(data.x[val_idx], x_anon_val)
        record = {
            "epoch": epoch,
            "theta_updates": theta_updates,
            "phi_updates": phi_updates,
            "min_loss": min_loss_val,
            "max_loss": max_loss_val,
            "train_action_acc": _acc_on(action_classifier, x_anon_train, data.actions[train_idx]),
            "val_action_acc": _acc_on(action_classifier, x_anon_val, data.actions[val_idx]),
            "train_privacy_acc": _acc_on(privacy_classifier, x_anon_train, data.privates[train_idx]),
            "val_privacy_acc": _acc_on(privacy_classifier, x_anon_val, data.privates[val_idx]),
            "recon_rmse": float(rmse),
        }
        trace.records.append(record)
        if config.early_stop_patience is not None:
            metric = record["val_action_acc"] * (1.0 - record["val_privacy_acc"])
            if metric > best_metric + 1e-6:
                best_metric, stall = metric, 0
            else:
                stall += 1
                if stall >= config.early_stop_patience:
                    break

    assert state_hash(action_classifier) == frozen_hash, "frozen classifier was mutated"
    return trace


@torch.no_grad()
def _apply_batched(model: torch.nn.Module, x: torch.Tensor, batch_size: int = 256) -> torch.Tensor:
    return torch.cat([model(x[i : i + batch_size]) for i in range(0, x.shape[0], batch_size)])


def _acc_on(model: torch.nn.Module, x: torch.Tensor, labels: torch.Tensor) -> float:
    return accuracy(model, x, labels)


def apply_anonymizer(anonymizer: torch.nn.Module, data: SkeletonDataset) -> SkeletonDataset:
    """Replace every sequence with the anonymizer output; labels untouched."""
    anonymizer.eval()
    x_anon = _apply_batched(anonymizer, data.x)
    return SkeletonDataset(
        x=x_anon,
        actions=data.actions.clone(),
        privates=data.privates.clone(),
        subject_ids=data.subject_ids.copy(),
        camera_ids=data.camera_ids.copy(),
        topology=list(data.topology),
        sample_ids=list(data.sample_ids),
    )


def save_checkpoint(
    out_dir: str | Path,
    anonymizer: torch.nn.Module,
    privacy_classifier: torch.nn.Module,
    action_classifier: torch.nn.Module,
    trace: TrainTrace,
    config: TrainConfig,
) -> Path:
    """Write the checkpoint directory layout: three param files, trace, config."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    save_params(anonymizer, out / "anonymizer.params")
    save_params(privacy_classifier, out / "privacy.params")
    save_params(action_classifier, out / "action.params")
    trace.save(out / "trace.jsonl")
    snapshot = asdict(config)
    (out / "config.json").write_text(json.dumps(snapshot, indent=2, sort_keys=True) + "\n")
    return out
