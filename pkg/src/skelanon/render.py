"""Static before/after skeleton figures.

One PNG per call: selected frames of the original sequence on the top row and
the anonymized sequence on the bottom, bones drawn from the topology edges,
orthographic projection onto an axis pair, identical axis limits across every
panel (computed from the union of both sequences, so jointly translating the
pair changes no within-figure geometry).
"""
from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt
import numpy as np

from .data import SkeletonSequence
from .errors import IndexOutOfRange, IoError

DEFAULT_FRAME_COUNT = 5


@dataclass
class RenderSpec:
    frame_indices: list[int] | None = None  # None: 5 uniformly spaced frames
    axes: tuple[int, int] = (0, 1)  # orthographic projection pair (x, y)
    dpi: int = 100
    point_size: float = 12.0


def default_frame_indices(n_frames: int, count: int = DEFAULT_FRAME_COUNT) -> list[int]:
    if n_frames == 1:
        return [0] * count
    return [round(i * (n_frames - 1) / (count - 1)) for i in range(count)]


def render_pair(
    original: SkeletonSequence,
    anonymized: SkeletonSequence,
    spec: RenderSpec,
    out_dir: str | Path,
    name: str = "pair",
) -> Path:
    """Render the two-row frame comparison and return the written image path."""
    if original.coords.shape != anonymized.coords.shape:
        raise IndexOutOfRange(
            f"sequences differ in shape: {original.coords.shape} vs {anonymized.coords.shape}"
        )
    t = original.n_frames
    indices = spec.frame_indices
    if indices is None:
        indices = default_frame_indices(t)
    for idx in indices:
        if not (0 <= idx < t):
            raise IndexOutOfRange(f"frame index {idx} outside [0, {t})")

    ax_a, ax_b = spec.axes
    both = np.concatenate([original.coords, anonymized.coords])
    lo = both[..., [ax_a, ax_b]].reshape(-1, 2).min(axis=0)
    hi = both[..., [ax_a, ax_b]].reshape(-1, 2).max(axis=0)
    span = np.maximum(hi - lo, 1e-6)
    lo = lo - 0.05 * span
    hi = hi + 0.05 * span

    fig, panels = plt.subplots(
        2, len(indices), figsize=(2.0 * len(indices), 4.0), squeeze=False
    )
    for row, seq in enumerate((original, anonymized)):
        for col, idx in enumerate(indices):
            panel = panels[row][col]
            frame = seq.coords[idx]
            for parent, child in seq.topology:
                panel.plot(
                    [frame[parent, ax_a], frame[child, ax_a]],
                    [frame[parent, ax_b], frame[child, ax_b]],
                    color="tab:blue",
                    linewidth=1.0,
                )
            panel.scatter(frame[:, ax_a], frame[:, ax_b], s=spec.point_size, color="tab:red")
            panel.set_xlim(lo[0], hi[0])
            panel.set_ylim(lo[1], hi[1])
            panel.set_xticks([])
            panel.set_yticks([])
            panel.set_aspect("equal")
            if col == 0:
                panel.set_ylabel("original" if row == 0 else "anonymized")

    out = Path(out_dir)
    try:
        out.mkdir(parents=True, exist_ok=True)
        path = out / f"{name}.png"
        fig.savefig(path, dpi=spec.dpi)
    except OSError as err:
        raise IoError(f"failed to write figure: {err}") from err
    finally:
        plt.close(fig)
    return path
