"""Independent oracles used across the test suite.

These intentionally avoid the package's model/loss code paths: the centroid
classifier works directly on bone-length features, and the loss oracles are
plain float64 numpy recomputations.
"""
import numpy as np

from skelanon.synthetic import bone_lengths


def centroid_identity_accuracy(train_samples, test_samples) -> float:
    """Nearest-centroid classification on frame-0 bone-length vectors."""
    by_subject = {}
    for sample in train_samples:
        by_subject.setdefault(sample.subject_id, []).append(
            bone_lengths(sample.sequence, frame=0)
        )
    subjects = sorted(by_subject)
    centroids = np.stack([np.mean(by_subject[s], axis=0) for s in subjects])
    hits = 0
    for sample in test_samples:
        feats = bone_lengths(sample.sequence, frame=0)
        pred = subjects[int(np.argmin(np.linalg.norm(centroids - feats, axis=1)))]
        hits += pred == sample.subject_id
    return hits / len(test_samples)


def between_subject_bone_variance(samples) -> float:
    """Variance of per-subject mean bone-length profiles, averaged over edges."""
    by_subject = {}
    for sample in samples:
        by_subject.setdefault(sample.subject_id, []).append(
            bone_lengths(sample.sequence).mean(axis=0)
        )
    means = np.stack([np.mean(v, axis=0) for v in by_subject.values()])
    return float(means.var(axis=0).mean())


def cross_entropy_oracle(logits: np.ndarray, labels: np.ndarray) -> float:
    """Direct 64-bit summation of -log softmax[label]."""
    logits = logits.astype(np.float64)
    total = 0.0
    for row, label in zip(logits, labels):
        shifted = row - row.max()
        total += -(shifted[label] - np.log(np.sum(np.exp(shifted))))
    return total / len(labels)


def entropy_oracle(logits: np.ndarray) -> float:
    logits = logits.astype(np.float64)
    total = 0.0
    for row in logits:
        shifted = row - row.max()
        p = np.exp(shifted) / np.sum(np.exp(shifted))
        total += -np.sum(np.where(p > 0, p * np.log(np.clip(p, 1e-300, None)), 0.0))
    return total / len(logits)


def mse_oracle(x: np.ndarray, y: np.ndarray) -> float:
    diff = x.astype(np.float64) - y.astype(np.float64)
    return float(np.sum(diff * diff) / diff.size)


def finite_difference_check(model, loss_fn, h=1e-4, tol=1e-4):
    """Central finite differences vs backprop for every trainable element.

    Runs the model in float64.  `loss_fn(model)` must return a scalar tensor.
    Returns the worst relative error seen; asserts it stays below `tol`.
    """
    import torch

    model = model.double()
    loss = loss_fn(model)
    model.zero_grad()
    loss.backward()
    worst = 0.0
    for name, param in model.named_parameters():
        if not param.requires_grad:
            continue
        grad = param.grad.detach().clone().view(-1)
        flat = param.data.view(-1)
        for i in range(flat.numel()):
            orig = flat[i].item()
            flat[i] = orig + h
            with torch.no_grad():
                up = loss_fn(model).item()
            flat[i] = orig - h
            with torch.no_grad():
                down = loss_fn(model).item()
            flat[i] = orig
            fd = (up - down) / (2 * h)
            bp = grad[i].item()
            rel = abs(fd - bp) / max(1.0, abs(fd), abs(bp))
            worst = max(worst, rel)
            assert rel < tol, f"{name}[{i}]: fd={fd} bp={bp} rel={rel}"
    return worst
