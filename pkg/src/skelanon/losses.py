"""Scalar objectives for the minimax anonymization game.

The minimization step trains the anonymizer on

    action CE  -  alpha * prediction entropy  +  beta * reconstruction MSE

while the maximization step trains the privacy adversary on

    alpha * privacy CE over anonymized input.

Entropy replaces the negated privacy cross-entropy in the minimization so the
anonymizer drives the adversary toward uninformative (uniform) predictions
instead of confidently-wrong ones that would still leak the label.  All logs
are natural; the reconstruction term averages over every element so weights
transfer across clip length, joint count, and batch size.
"""
from __future__ import annotations

from dataclasses import dataclass

import torch
import torch.nn.functional as F

from .errors import LabelOutOfRange, ShapeMismatch


@dataclass
class LossWeights:
    alpha: float = 1.0
    beta: float = 10.0

    def __post_init__(self):
        for name in ("alpha", "beta"):
            v = float(getattr(self, name))
            if not (v >= 0.0) or v != v or v == float("inf"):
                raise ValueError(f"{name} must be finite and >= 0, got {v}")


def cross_entropy(logits: torch.Tensor, labels: torch.Tensor) -> torch.Tensor:
    """Mean of -log softmax(logits)[label], via a stable log-sum-exp."""
    if labels.min() < 0 or labels.max() >= logits.shape[1]:
        raise LabelOutOfRange(
            f"labels must lie in [0, {logits.shape[1]}), got range "
            f"[{int(labels.min())}, {int(labels.max())}]"
        )
    log_probs = F.log_softmax(logits, dim=1)
    return -log_probs.gather(1, labels.view(-1, 1)).mean()


def prediction_entropy(logits: torch.Tensor) -> torch.Tensor:
    """Mean Shannon entropy of softmax(logits) rows; 0*log 0 counts as 0."""
    log_probs = F.log_softmax(logits, dim=1)
    probs = log_probs.exp()
    return -(probs * log_probs).sum(dim=1).mean()


def reconstruction_error(x: torch.Tensor, x_anon: torch.Tensor):
    """Per-element mean squared displacement and its root; returns (mse, rmse)."""
    if x.shape != x_anon.shape:
        raise ShapeMismatch(f"shape {tuple(x.shape)} vs {tuple(x_anon.shape)}")
    mse = ((x - x_anon) ** 2).mean()
    return mse, torch.sqrt(mse)


def minimization_loss(
    x: torch.Tensor,
    y: torch.Tensor,
    anonymizer,
    privacy_classifier,
    action_classifier,
    weights: LossWeights,
) -> torch.Tensor:
    """Anonymizer objective; classifiers enter as constants.

    The caller is responsible for excluding classifier parameters from the
    update (the training loop freezes them), so gradients reach only the
    anonymizer.
    """
    x_anon = anonymizer(x)
    loss = cross_entropy(action_classifier(x_anon), y)
    if weights.alpha != 0.0:
        loss = loss - weights.alpha * prediction_entropy(privacy_classifier(x_anon))
    if weights.beta != 0.0:
        mse, _ = reconstruction_error(x, x_anon)
        loss = loss + weights.beta * mse
    return loss


def maximization_loss(
    x: torch.Tensor,
    z: torch.Tensor,
    anonymizer,
    privacy_classifier,
    alpha: float,
) -> torch.Tensor:
    """Adversary objective: alpha * privacy CE on (detached) anonymized input."""
    with torch.no_grad():
        x_anon = anonymizer(x)
    if alpha == 0.0:
        # Zero weight: keep the graph over phi but with an exactly-zero slope.
        return 0.0 * cross_entropy(privacy_classifier(x_anon), z)
    return alpha * cross_entropy(privacy_classifier(x_anon), z)
