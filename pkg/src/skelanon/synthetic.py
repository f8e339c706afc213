"""Synthetic skeleton corpus with a known privacy mechanism.

Desk-scale stand-in for the licensed motion datasets.  Identity is carried
entirely by the bone-length profile: each subject scales a canonical chain
rig by a distinct dyadic factor, so bone lengths identify the subject and,
through the body centroid, identity survives global average pooling.  Actions
are whole-body translations (a static class offset plus an oscillation with
action-specific axis, frequency, and amplitude); static offsets are chosen
orthogonal to the rig's centroid direction so the action and identity signals
occupy complementary subspaces of the pooled features.  All rest-pose
coordinates, scale factors, and translation offsets are dyadic rationals
(multiples of 1/64 or finer), so at noise level 0 every arithmetic step is
exact in float32 and within-subject bone lengths are constant to the last
bit, across frames and samples.  That makes limb-length statistics a usable
independent oracle for both the leakage audit and the anonymization
mechanism.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .data import LabeledSample, SkeletonSequence
from .errors import BadConfig

_AXES = np.eye(3)
# Chain rig: joint j hangs off joint j-1 along a cycling axis direction.
_DIR_CYCLE = [(0.0, 1.0, 0.0), (1.0, 0.0, 0.0), (0.0, 0.0, 1.0)]
_BASE_BONE_LENGTH = 0.25

# Per-action trajectory: (oscillation axis, cycles per clip, amplitude,
# static offset coefficients (p, q)).  The static offset p*u + q*v lives in
# the plane orthogonal to the rig centroid (u, v built in generate_synthetic),
# separating class means without touching the identity direction; the
# oscillation adds temporal texture.  Frequencies are integers so the clip
# holds whole cycles and the oscillation is (near-)zero-mean over time.
_ACTION_TABLE = [
    (0, 1, 0.5, (1.0, 0.0)),
    (1, 2, 0.5, (0.0, 1.0)),
    (2, 3, 0.75, (-1.0, 0.0)),
    (0, 5, 0.75, (0.0, -1.0)),
    (1, 4, 0.25, (0.75, 0.75)),
    (2, 6, 0.5, (-0.75, 0.75)),
    (0, 7, 0.25, (0.75, -0.75)),
    (1, 8, 0.75, (-0.75, -0.75)),
]


@dataclass
class SyntheticConfig:
    n_subjects: int = 8
    n_actions: int = 4
    samples_per_pair: int = 8
    n_frames: int = 64
    joint_count: int = 25
    noise: float = 0.0

    def __post_init__(self):
        for name in ("n_subjects", "n_actions", "samples_per_pair", "n_frames", "joint_count"):
            if getattr(self, name) <= 0:
                raise BadConfig(f"{name} must be positive, got {getattr(self, name)}")
        if self.joint_count < 2:
            raise BadConfig("joint_count must be at least 2 to have a bone")
        if self.n_actions > len(_ACTION_TABLE):
            raise BadConfig(f"at most {len(_ACTION_TABLE)} distinct actions supported")
        if self.noise < 0:
            raise BadConfig("noise must be nonnegative")


def chain_topology(joint_count: int) -> list[tuple[int, int]]:
    return [(j - 1, j) for j in range(1, joint_count)]


def _quantize64(x: np.ndarray) -> np.ndarray:
    """Round to multiples of 1/64 so offsets stay exactly representable."""
    return np.round(x * 64.0) / 64.0


def _edge_base_factors(n_edges: int) -> np.ndarray:
    """Fixed per-edge length variation shared by every subject (rig constants).

    Dyadic factors in [3/4, 5/4] keep the bone-length profile non-uniform
    without carrying any identity information.
    """
    return 1.0 + (np.arange(n_edges) * 3 % 9 - 4) / 16.0


def _subject_scales(n_subjects: int) -> np.ndarray:
    """Global dyadic scale per subject: subject s is 1 + s/8 times the base
    rig, so the bone-length profile (and the body centroid) identifies the
    subject by construction."""
    return 1.0 + np.arange(n_subjects) / 8.0


def _offset_basis(rest: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Two unit-ish vectors spanning the plane orthogonal to the rig centroid,
    quantized to 1/64 so offsets stay exactly representable.  Action offsets
    placed in this plane leave the identity-carrying centroid direction
    (nearly) untouched."""
    c = rest.mean(axis=0)
    c_hat = c / np.linalg.norm(c)
    u = np.array([c_hat[1], -c_hat[0], 0.0])
    u /= np.linalg.norm(u)
    v = np.cross(c_hat, u)
    return _quantize64(u), _quantize64(v)


def generate_synthetic(config: SyntheticConfig, seed: int) -> list[LabeledSample]:
    """Deterministically build the labeled corpus for a given (config, seed)."""
    rng = np.random.default_rng(seed)
    d = config.joint_count
    t = config.n_frames
    topology = chain_topology(d)
    dirs = np.array([_DIR_CYCLE[e % 3] for e in range(d - 1)])
    base_lengths = _BASE_BONE_LENGTH * _edge_base_factors(d - 1)
    scales = _subject_scales(config.n_subjects)

    base_rest = np.zeros((d, 3))
    for e, (parent, child) in enumerate(topology):
        base_rest[child] = base_rest[parent] + base_lengths[e] * dirs[e]
    u, v = _offset_basis(base_rest)

    samples: list[LabeledSample] = []
    for subject in range(config.n_subjects):
        rest = scales[subject] * base_rest
        for action in range(config.n_actions):
            axis, freq, amp, (p, q) = _ACTION_TABLE[action]
            static = p * u + q * v
            for k in range(config.samples_per_pair):
                phase = int(rng.integers(0, t))
                frames_t = np.arange(t) + phase
                osc = _quantize64(amp * np.sin(2.0 * np.pi * freq * frames_t / t))
                offset = static[None, :] + osc[:, None] * _AXES[axis]
                coords = rest[None, :, :] + offset[:, None, :]
                coords = coords.astype(np.float32)
                if config.noise > 0:
                    jitter = rng.normal(0.0, config.noise, size=coords.shape)
                    coords = (coords + jitter).astype(np.float32)
                samples.append(
                    LabeledSample(
                        sequence=SkeletonSequence(coords, joint_count=d, topology=topology),
                        action=action,
                        private=subject,
                        subject_id=subject,
                        camera_id=k % 2,
                        sample_id=f"s{subject:02d}_a{action:02d}_r{k:02d}",
                    )
                )
    return samples


def bone_lengths(seq: SkeletonSequence, frame: int | None = None) -> np.ndarray:
    """Per-edge Euclidean bone lengths; shape (E,) for one frame, (T, E) for all.

    Differences and norms are taken in float64 so exactly-representable
    float32 coordinates yield exact lengths.
    """
    coords = seq.coords.astype(np.float64)
    if frame is not None:
        coords = coords[frame : frame + 1]
    parents = np.array([p for p, _ in seq.topology])
    children = np.array([c for _, c in seq.topology])
    deltas = coords[:, children] - coords[:, parents]
    lengths = np.sqrt((deltas**2).sum(axis=2))
    return lengths[0] if frame is not None else lengths
