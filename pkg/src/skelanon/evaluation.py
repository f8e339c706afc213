"""Leakage audits, anonymizer evaluation, model selection, and sweeps.

The evaluation protocol uses *fresh* classifiers: one pair of pre-trained
classifiers drives the adversarial training, and a second pair, pre-trained on
raw data with disjoint seeds, measures accuracy after anonymization.  Models
are ranked by the selection metric `action_top1 * (1 - privacy_top1)`.
"""
from __future__ import annotations

import copy
import json
import math
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Sequence

import numpy as np
import torch

from .data import DatasetSplit
from .errors import EmptyInput
from .losses import LossWeights, reconstruction_error
from .training import (
    PRIVATE,
    SkeletonDataset,
    TrainConfig,
    accuracy,
    adversarial_train,
    apply_anonymizer,
    pretrain_classifier,
    seed_everything,
)


@dataclass
class EvalReport:
    action_top1: float
    privacy_top1: float
    privacy_top5: float
    recon_rmse: float
    selection_metric: float = field(init=False)
    config: dict = field(default_factory=dict)

    def __post_init__(self):
        if not (0.0 <= self.action_top1 <= 1.0 and 0.0 <= self.privacy_top1 <= 1.0):
            raise ValueError("accuracies must lie in [0, 1]")
        if self.privacy_top5 < self.privacy_top1:
            raise ValueError("top-5 accuracy cannot be below top-1")
        if self.recon_rmse < 0:
            raise ValueError("recon_rmse must be nonnegative")
        self.selection_metric = self.action_top1 * (1.0 - self.privacy_top1)

    def to_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def from_dict(cls, d: dict) -> "EvalReport":
        report = cls(
            action_top1=d["action_top1"],
            privacy_top1=d["privacy_top1"],
            privacy_top5=d["privacy_top5"],
            recon_rmse=d["recon_rmse"],
            config=d.get("config", {}),
        )
        return report


@dataclass
class AuditResult:
    label_kind: str
    mean_top1: float
    std_top1: float
    per_seed_top1: list[float]
    mean_top5: float | None = None
    std_top5: float | None = None
    chance: float | None = None

    def to_dict(self) -> dict:
        return asdict(self)


def audit_leakage(
    data: SkeletonDataset,
    split: DatasetSplit,
    label_kind: str,
    config: TrainConfig,
    backbone: str = "toy_gcn",
    n_seeds: int = 3,
    base_seed: int = 0,
    shuffle_labels: bool = False,
    **backbone_kwargs,
) -> AuditResult:
    """Train n_seeds fresh classifiers on raw data and report val accuracy.

    Top-5 accuracy is reported alongside top-1 when there are more than five
    classes.  `shuffle_labels` permutes labels (train and val consistently by
    sample) to obtain a chance-level control.
    """
    if shuffle_labels:
        data = copy.copy(data)
        rng = np.random.default_rng(base_seed)
        perm = torch.from_numpy(rng.permutation(len(data)))
        shuffled = data.labels(label_kind)[perm]
        if label_kind == PRIVATE:
            data.privates = shuffled
        else:
            data.actions = shuffled
    n_classes = data.n_classes(label_kind)
    labels = data.labels(label_kind)
    val_idx = torch.tensor(split.val_indices, dtype=torch.long)
    top1, top5 = [], []
    for i in range(n_seeds):
        model, _ = pretrain_classifier(
            data, split, label_kind, config, backbone=backbone,
            seed=base_seed + i, **backbone_kwargs,
        )
        top1.append(accuracy(model, data.x[val_idx], labels[val_idx], top_k=1))
        if n_classes > 5:
            top5.append(accuracy(model, data.x[val_idx], labels[val_idx], top_k=5))
    return AuditResult(
        label_kind=label_kind,
        mean_top1=float(np.mean(top1)),
        std_top1=float(np.std(top1)),
        per_seed_top1=top1,
        mean_top5=float(np.mean(top5)) if top5 else None,
        std_top5=float(np.std(top5)) if top5 else None,
        chance=1.0 / n_classes,
    )


def balance_by_label(indices: Sequence[int], labels: torch.Tensor, seed: int = 0) -> list[int]:
    """Downsample indices so every label value keeps the minimum class count."""
    rng = np.random.default_rng(seed)
    by_label: dict[int, list[int]] = {}
    for i in indices:
        by_label.setdefault(int(labels[i]), []).append(i)
    floor = min(len(v) for v in by_label.values())
    out: list[int] = []
    for label in sorted(by_label):
        pool = by_label[label]
        out.extend(rng.choice(pool, size=floor, replace=False).tolist())
    return sorted(out)


def evaluate_anonymizer(
    anonymizer: torch.nn.Module,
    data: SkeletonDataset,
    split: DatasetSplit,
    fresh_action_classifier: torch.nn.Module,
    fresh_privacy_classifier: torch.nn.Module,
    balance_privacy: bool = True,
    config_snapshot: dict | None = None,
) -> EvalReport:
    """Score the fresh classifiers on the anonymized validation set."""
    anonymized = apply_anonymizer(anonymizer, data)
    val_idx = list(split.val_indices)
    priv_idx = (
        balance_by_label(val_idx, data.privates) if balance_privacy else val_idx
    )
    val = torch.tensor(val_idx, dtype=torch.long)
    priv = torch.tensor(priv_idx, dtype=torch.long)
    _, rmse = reconstruction_error(data.x[val], anonymized.x[val])
    action_top1 = accuracy(fresh_action_classifier, anonymized.x[val], data.actions[val])
    privacy_top1 = accuracy(fresh_privacy_classifier, anonymized.x[priv], data.privates[priv], top_k=1)
    privacy_top5 = accuracy(fresh_privacy_classifier, anonymized.x[priv], data.privates[priv], top_k=5)
    return EvalReport(
        action_top1=action_top1,
        privacy_top1=privacy_top1,
        privacy_top5=privacy_top5,
        recon_rmse=float(rmse),
        config=config_snapshot or {},
    )


def select_best(reports: Sequence[EvalReport]) -> EvalReport:
    """Argmax of the selection metric; ties break to lower RMSE then lower alpha."""
    if not reports:
        raise EmptyInput("select_best needs at least one report")
    return max(
        reports,
        key=lambda r: (
            r.selection_metric,
            -r.recon_rmse,
            -float(r.config.get("alpha", math.inf)),
        ),
    )


@dataclass
class SweepResult:
    reports: list[EvalReport]
    failures: list[dict]

    def save(self, out_dir: str | Path):
        out = Path(out_dir)
        out.mkdir(parents=True, exist_ok=True)
        table = {
            "reports": [r.to_dict() for r in self.reports],
            "failures": self.failures,
        }
        (out / "sweep_table.json").write_text(json.dumps(table, indent=2, sort_keys=True) + "\n")


def sweep(
    alphas: Sequence[float],
    betas: Sequence[float],
    data: SkeletonDataset,
    split: DatasetSplit,
    base_config: TrainConfig,
    anonymizer_factory,
    train_action_classifier: torch.nn.Module,
    train_privacy_classifier: torch.nn.Module,
    fresh_action_classifier: torch.nn.Module,
    fresh_privacy_classifier: torch.nn.Module,
    out_dir: str | Path | None = None,
) -> SweepResult:
    """One full adversarial training + evaluation per (alpha, beta) cell.

    Cell seeds are derived deterministically from the base seed and the grid
    coordinates; a failing cell is recorded and the sweep continues.
    `anonymizer_factory()` must return a freshly initialized anonymizer (it is
    called after the cell seed is set, so initialization is per-cell
    deterministic).
    """
    if not alphas or not betas:
        raise EmptyInput("alpha and beta grids must be nonempty")
    reports: list[EvalReport] = []
    failures: list[dict] = []
    for ai, alpha in enumerate(alphas):
        for bi, beta in enumerate(betas):
            cell_seed = base_config.seed + 1000 * ai + bi
            config = copy.deepcopy(base_config)
            config.weights = LossWeights(alpha=alpha, beta=beta)
            config.seed = cell_seed
            try:
                seed_everything(cell_seed)
                anonymizer = anonymizer_factory()
                privacy = copy.deepcopy(train_privacy_classifier)
                adversarial_train(
                    anonymizer, privacy, train_action_classifier, data, split, config
                )
                report = evaluate_anonymizer(
                    anonymizer,
                    data,
                    split,
                    fresh_action_classifier,
                    fresh_privacy_classifier,
                    config_snapshot={
                        "alpha": alpha,
                        "beta": beta,
                        "seed": cell_seed,
                        "lr": config.lr_anonymizer,
                        "variant": getattr(anonymizer, "variant", "unknown"),
                    },
                )
                reports.append(report)
            except Exception as err:  # cell isolation: record and continue
                failures.append({"alpha": alpha, "beta": beta, "error": repr(err)})
    result = SweepResult(reports=reports, failures=failures)
    if out_dir is not None:
        result.save(out_dir)
        _plot_tradeoff(result.reports, Path(out_dir) / "tradeoff.png")
    return result


def _plot_tradeoff(reports: Sequence[EvalReport], path: Path):
    """Privacy-vs-action scatter with the privacy axis reversed."""
    if not reports:
        return
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    fig, ax = plt.subplots(figsize=(5, 4))
    xs = [r.action_top1 for r in reports]
    ys = [r.privacy_top1 for r in reports]
    ax.scatter(xs, ys)
    for r in reports:
        label = f"{r.config.get('alpha', '?')}-{r.config.get('beta', '?')}"
        ax.annotate(label, (r.action_top1, r.privacy_top1), fontsize=7)
    ax.set_xlabel("action accuracy")
    ax.set_ylabel("privacy accuracy")
    ax.invert_yaxis()
    fig.tight_layout()
    fig.savefig(path)
    plt.close(fig)
