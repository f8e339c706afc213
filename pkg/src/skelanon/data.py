"""Skeleton dataset handling: parsing, validation, filtering, splits, resampling.

A skeleton clip is a `(T, D, 3)` float32 array of joint coordinates in meters
plus a bone-edge topology.  The raw `.skeleton` container (one file per clip)
interleaves per-frame body metadata with joint lines; `parse_skeleton_file`
turns it into one sequence per tracked body.  `save_store`/`load_store`
implement the binary tensor store used by the CLI: a JSON manifest plus one
raw little-endian float32 file per sample.
"""
from __future__ import annotations

import json
import re
from collections import Counter
from dataclasses import dataclass, field, replace
from enum import Enum
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from .errors import EmptyPartition, MalformedFile

NUM_JOINTS = 25

# Kinect v2 25-joint rig, 0-based (parent, child) bone edges.
NTU_EDGES = [
    (0, 1), (1, 20), (20, 2), (2, 3),
    (20, 4), (4, 5), (5, 6), (6, 7), (7, 21), (7, 22),
    (20, 8), (8, 9), (9, 10), (10, 11), (11, 23), (11, 24),
    (0, 12), (12, 13), (13, 14), (14, 15),
    (0, 16), (16, 17), (17, 18), (18, 19),
]

# S{setup}C{camera}P{subject}R{rep}A{action} naming used by raw clip files.
CLIP_NAME_RE = re.compile(
    r"S(?P<setup>\d{3})C(?P<camera>\d{3})P(?P<subject>\d{3})R(?P<rep>\d{3})A(?P<action>\d{3})"
)

# Fields per body-info line and per joint line in the raw container.
BODY_INFO_FIELDS = 10
JOINT_FIELDS = 12


@dataclass
class SkeletonSequence:
    """A `(T, D, 3)` coordinate array plus bone topology."""

    coords: np.ndarray
    joint_count: int = NUM_JOINTS
    topology: list[tuple[int, int]] = field(default_factory=lambda: list(NTU_EDGES))

    def __post_init__(self):
        self.coords = np.asarray(self.coords, dtype=np.float32)
        if self.coords.ndim != 3 or self.coords.shape[2] != 3:
            raise ValueError(f"coords must be (T, D, 3), got {self.coords.shape}")
        if self.coords.shape[1] != self.joint_count:
            raise ValueError(
                f"coords has {self.coords.shape[1]} joints, declared {self.joint_count}"
            )
        for parent, child in self.topology:
            if not (0 <= parent < self.joint_count and 0 <= child < self.joint_count):
                raise ValueError(f"topology edge ({parent}, {child}) out of range")

    @property
    def n_frames(self) -> int:
        return self.coords.shape[0]

    def is_finite(self) -> bool:
        return bool(np.isfinite(self.coords).all())


@dataclass
class LabeledSample:
    """A sequence with action label, private label, and recording metadata."""

    sequence: SkeletonSequence
    action: int
    private: int
    subject_id: int
    camera_id: int
    n_bodies: int = 1
    sample_id: str = ""


class SplitPolicy(Enum):
    BY_SUBJECT = "by_subject"
    BY_CAMERA = "by_camera"


@dataclass
class DatasetSplit:
    train_indices: list[int]
    val_indices: list[int]
    policy: SplitPolicy

    def __post_init__(self):
        overlap = set(self.train_indices) & set(self.val_indices)
        if overlap:
            raise ValueError(f"train/val overlap on indices {sorted(overlap)}")


def _next_line(lines: list[str], pos: int) -> tuple[str, int]:
    if pos >= len(lines):
        raise MalformedFile("unexpected end of file", line_number=len(lines) + 1)
    return lines[pos], pos + 1


def _parse_int(token: str, line_number: int) -> int:
    try:
        return int(token)
    except ValueError:
        raise MalformedFile(f"expected integer, got {token!r}", line_number)


def parse_skeleton_file(
    text: str, joint_count: int = NUM_JOINTS
) -> list[tuple[int, SkeletonSequence]]:
    """Parse a raw `.skeleton` container into one sequence per tracked body.

    Bodies are keyed by the first field of the body-info line and returned in
    first-appearance order; a body absent from a frame simply contributes no
    frame to its sequence.  Any structural violation rejects the whole file
    with a line-anchored `MalformedFile`.
    """
    lines = text.splitlines()
    pos = 0
    line, pos = _next_line(lines, pos)
    n_frames = _parse_int(line.strip(), pos)
    if n_frames < 0:
        raise MalformedFile(f"negative frame count {n_frames}", 1)

    frames_by_body: dict[int, list[np.ndarray]] = {}
    for _ in range(n_frames):
        line, pos = _next_line(lines, pos)
        n_bodies = _parse_int(line.strip(), pos)
        if n_bodies < 0:
            raise MalformedFile(f"negative body count {n_bodies}", pos)
        for _ in range(n_bodies):
            line, pos = _next_line(lines, pos)
            tokens = line.split()
            if len(tokens) != BODY_INFO_FIELDS:
                raise MalformedFile(
                    f"body-info line has {len(tokens)} fields, expected {BODY_INFO_FIELDS}",
                    pos,
                )
            body_id = _parse_int(tokens[0], pos)
            line, pos = _next_line(lines, pos)
            n_joints = _parse_int(line.strip(), pos)
            if n_joints != joint_count:
                raise MalformedFile(
                    f"joint count {n_joints} != declared {joint_count}", pos
                )
            joints = np.empty((joint_count, 3), dtype=np.float32)
            for j in range(joint_count):
                line, pos = _next_line(lines, pos)
                tokens = line.split()
                if len(tokens) != JOINT_FIELDS:
                    raise MalformedFile(
                        f"joint line has {len(tokens)} fields, expected {JOINT_FIELDS}",
                        pos,
                    )
                try:
                    values = [float(t) for t in tokens]
                except ValueError:
                    raise MalformedFile(f"non-numeric token on joint line", pos)
                joints[j] = np.asarray(values[:3], dtype=np.float32)
            frames_by_body.setdefault(body_id, []).append(joints)

    if pos < len(lines) and any(l.strip() for l in lines[pos:]):
        raise MalformedFile("trailing content after declared frames", pos + 1)

    return [
        (body_id, SkeletonSequence(np.stack(frames), joint_count=joint_count))
        for body_id, frames in frames_by_body.items()
    ]


def write_skeleton_file(
    frames: Sequence[Sequence[tuple[int, np.ndarray]]], joint_count: int = NUM_JOINTS
) -> str:
    """Serialize frames of `(body_id, (D, 3) joints)` back to container text.

    Inverse of `parse_skeleton_file` for well-formed inputs; the 9 discarded
    per-joint fields and the 9 extra body-info fields are written as zeros.
    Coordinates are written with `repr` so float32 values round-trip bit-exactly.
    """
    out = [str(len(frames))]
    for frame in frames:
        out.append(str(len(frame)))
        for body_id, joints in frame:
            joints = np.asarray(joints, dtype=np.float32)
            if joints.shape != (joint_count, 3):
                raise ValueError(f"joints must be ({joint_count}, 3), got {joints.shape}")
            out.append(" ".join([str(body_id)] + ["0"] * (BODY_INFO_FIELDS - 1)))
            out.append(str(joint_count))
            for row in joints:
                fields = [repr(float(v)) for v in row] + ["0"] * (JOINT_FIELDS - 3)
                out.append(" ".join(fields))
    return "\n".join(out) + "\n"


def filter_samples(
    samples: Iterable[LabeledSample],
) -> tuple[list[LabeledSample], Counter]:
    """Drop malformed samples; returns survivors in order plus drop counts.

    Drop reasons: `multi_body` (more than one tracked body), `zero_frames`,
    `non_finite` (any NaN/Inf coordinate).
    """
    kept: list[LabeledSample] = []
    drops: Counter = Counter()
    for sample in samples:
        if sample.n_bodies > 1:
            drops["multi_body"] += 1
        elif sample.sequence.n_frames == 0:
            drops["zero_frames"] += 1
        elif not sample.sequence.is_finite():
            drops["non_finite"] += 1
        else:
            kept.append(sample)
    return kept, drops


def make_split(
    samples: Sequence[LabeledSample],
    policy: SplitPolicy,
    holdout_ids: Iterable[int],
) -> DatasetSplit:
    """Partition sample indices by held-out subject or camera ids."""
    holdout = set(holdout_ids)
    if not holdout:
        raise ValueError("holdout_ids must be nonempty")
    key = (lambda s: s.subject_id) if policy is SplitPolicy.BY_SUBJECT else (
        lambda s: s.camera_id
    )
    present = {key(s) for s in samples}
    missing = holdout - present
    if missing:
        raise ValueError(f"holdout ids {sorted(missing)} not present in dataset")
    train, val = [], []
    for i, sample in enumerate(samples):
        (val if key(sample) in holdout else train).append(i)
    if not train or not val:
        raise EmptyPartition(
            f"split left {'train' if not train else 'val'} empty "
            f"(holdout {sorted(holdout)})"
        )
    return DatasetSplit(train, val, policy)


def resample_frames(seq: SkeletonSequence, target_frames: int) -> SkeletonSequence:
    """Fix clip length by uniform index selection or cyclic loop-padding.

    Never interpolates: every output frame is an exact copy of an input frame,
    so downstream displacement is attributable to the anonymizer alone.
    """
    if target_frames < 1:
        raise ValueError("target_frames must be >= 1")
    t = seq.n_frames
    if t >= target_frames:
        idx = np.minimum(
            np.round(np.arange(target_frames) * t / target_frames).astype(int), t - 1
        )
    else:
        idx = np.arange(target_frames) % t
    return replace(seq, coords=seq.coords[idx].copy())


def center_normalize(seq: SkeletonSequence, root_joint: int = 0) -> SkeletonSequence:
    """Subtract the first frame's root-joint position from every coordinate."""
    if not (0 <= root_joint < seq.joint_count):
        raise ValueError(f"root joint {root_joint} out of range")
    origin = seq.coords[0, root_joint]
    return replace(seq, coords=seq.coords - origin)


def parse_clip_name(name: str) -> dict | None:
    """Extract setup/camera/subject/action ids from a raw clip filename."""
    m = CLIP_NAME_RE.search(name)
    if m is None:
        return None
    return {k: int(v) for k, v in m.groupdict().items()}


# --------------------------------------------------------------------------
# Binary tensor store


def save_store(samples: Sequence[LabeledSample], store_dir: str | Path) -> Path:
    """Write samples as a manifest plus raw `(T, D, 3)` float32 tensors."""
    store = Path(store_dir)
    store.mkdir(parents=True, exist_ok=True)
    if not samples:
        raise ValueError("cannot write an empty store")
    topology = samples[0].sequence.topology
    manifest = {
        "version": 1,
        "joint_count": samples[0].sequence.joint_count,
        "topology": [list(e) for e in topology],
        "samples": [],
    }
    for i, sample in enumerate(samples):
        sample_id = sample.sample_id or f"sample{i:05d}"
        fname = f"{sample_id}.f32"
        coords = np.ascontiguousarray(sample.sequence.coords, dtype="<f4")
        (store / fname).write_bytes(coords.tobytes())
        manifest["samples"].append(
            {
                "id": sample_id,
                "action": sample.action,
                "private": sample.private,
                "subject_id": sample.subject_id,
                "camera_id": sample.camera_id,
                "shape": list(coords.shape),
                "file": fname,
            }
        )
    (store / "manifest.json").write_text(
        json.dumps(manifest, indent=2, sort_keys=True) + "\n"
    )
    return store


def load_store(store_dir: str | Path) -> list[LabeledSample]:
    """Load a tensor store written by `save_store`, validating shapes."""
    store = Path(store_dir)
    manifest = json.loads((store / "manifest.json").read_text())
    topology = [tuple(e) for e in manifest["topology"]]
    joint_count = manifest["joint_count"]
    samples = []
    for entry in manifest["samples"]:
        shape = tuple(entry["shape"])
        raw = (store / entry["file"]).read_bytes()
        coords = np.frombuffer(raw, dtype="<f4").reshape(shape)
        seq = SkeletonSequence(coords, joint_count=joint_count, topology=topology)
        samples.append(
            LabeledSample(
                sequence=seq,
                action=entry["action"],
                private=entry["private"],
                subject_id=entry["subject_id"],
                camera_id=entry["camera_id"],
                sample_id=entry["id"],
            )
        )
    return samples
