"""Anonymizer networks and classifier backbones.

Two anonymizer variants share the contract `(N, T, D, 3) -> (N, T, D, 3)`:

* `ResidualAnonymizer` — a per-frame two-layer MLP added to its input.  The
  output layer is initialized near zero so the network starts as (almost) the
  identity map.
* `UNetAnonymizer` — an encoder/decoder over the `(T, D)` grid with skip
  connections and 3 coordinate channels; joints are zero-padded from 25 to 32
  internally so two pooling halvings stay integral.

`ToyGCN` is the desk-scale classifier backbone: stacked blocks of graph
convolution over the bone-adjacency matrix plus temporal convolution, followed
by global average pooling and a linear readout.  Full-scale backbones can be
registered via `register_backbone` as long as they map `(N, T, D, 3)` batches
to `(N, n_classes)` logits.

Parameters persist in a small versioned binary container (magic, version,
variant tag, named float32 tensor table); round-trips are bit-exact.
"""
from __future__ import annotations

import struct
from pathlib import Path

import numpy as np
import torch
import torch.nn as nn
import torch.nn.functional as F

from .errors import BadConfig, CorruptFile, IoError, ShapeMismatch, VersionMismatch

PARAMS_MAGIC = b"SKLP"
PARAMS_VERSION = 1

UNET_PADDED_JOINTS = 32


def _check_batch(x: torch.Tensor, joint_count: int):
    if x.ndim != 4 or x.shape[3] != 3:
        raise ShapeMismatch(f"expected (N, T, D, 3) batch, got {tuple(x.shape)}")
    if x.shape[2] != joint_count:
        raise ShapeMismatch(
            f"model configured for {joint_count} joints, input has {x.shape[2]}"
        )


class ResidualAnonymizer(nn.Module):
    """Per-frame residual MLP: out = MLP(frame) + frame."""

    variant = "residual_mlp"

    def __init__(self, joint_count: int = 25, hidden: int = 128, init_scale: float = 1e-3):
        super().__init__()
        self.joint_count = joint_count
        self.init_scale = init_scale
        width = joint_count * 3
        self.fc1 = nn.Linear(width, hidden)
        self.fc2 = nn.Linear(hidden, width)
        nn.init.uniform_(self.fc2.weight, -init_scale, init_scale)
        nn.init.zeros_(self.fc2.bias)

    def forward(self, x: torch.Tensor) -> torch.Tensor:
        _check_batch(x, self.joint_count)
        n, t, d, _ = x.shape
        flat = x.reshape(n * t, d * 3)
        delta = self.fc2(torch.tanh(self.fc1(flat)))
        return (flat + delta).reshape(n, t, d, 3)


class UNetAnonymizer(nn.Module):
    """Depth-3 U-Net over the (frames, joints) grid with 3 channels."""

    variant = "unet"

    def __init__(self, joint_count: int = 25, base_channels: int = 8):
        super().__init__()
        self.joint_count = joint_count
        self.base_channels = base_channels
        c = base_channels
        self.enc1 = self._block(3, c)
        self.enc2 = self._block(c, 2 * c)
        self.bottleneck = self._block(2 * c, 4 * c)
        self.up2 = nn.ConvTranspose2d(4 * c, 2 * c, kernel_size=2, stride=2)
        self.dec2 = self._block(4 * c, 2 * c)
        self.up1 = nn.ConvTranspose2d(2 * c, c, kernel_size=2, stride=2)
        self.dec1 = self._block(2 * c, c)
        self.head = nn.Conv2d(c, 3, kernel_size=1)

    @staticmethod
    def _block(c_in: int, c_out: int) -> nn.Sequential:
        return nn.Sequential(
            nn.Conv2d(c_in, c_out, kernel_size=3, padding=1),
            nn.ReLU(),
            nn.Conv2d(c_out, c_out, kernel_size=3, padding=1),
            nn.ReLU(),
        )

    def forward(self, x: torch.Tensor) -> torch.Tensor:
        _check_batch(x, self.joint_count)
        n, t, d, _ = x.shape
        if t % 4 != 0:
            raise ShapeMismatch(f"frame count {t} must be divisible by 4")
        grid = x.permute(0, 3, 1, 2)  # (N, 3, T, D)
        pad = UNET_PADDED_JOINTS - d
        if pad < 0:
            raise ShapeMismatch(f"at most {UNET_PADDED_JOINTS} joints supported, got {d}")
        grid = F.pad(grid, (0, pad))
        e1 = self.enc1(grid)
        e2 = self.enc2(F.max_pool2d(e1, 2))
        b = self.bottleneck(F.max_pool2d(e2, 2))
        d2 = self.dec2(torch.cat([self.up2(b), e2], dim=1))
        d1 = self.dec1(torch.cat([self.up1(d2), e1], dim=1))
        out = self.head(d1)[:, :, :, :d]
        return out.permute(0, 2, 3, 1)


class ToyGCN(nn.Module):
    """Stacked (graph conv + temporal conv) blocks with a linear readout."""

    variant = "toy_gcn"

    def __init__(
        self,
        n_classes: int,
        topology: list[tuple[int, int]],
        joint_count: int = 25,
        channels: int = 16,
        n_blocks: int = 3,
        temporal_kernel: int = 5,
    ):
        super().__init__()
        self.n_classes = n_classes
        self.joint_count = joint_count
        adj = np.eye(joint_count)
        for parent, child in topology:
            adj[parent, child] = 1.0
            adj[child, parent] = 1.0
        deg = adj.sum(axis=1)
        norm = adj / np.sqrt(np.outer(deg, deg))
        self.register_buffer("adjacency", torch.tensor(norm, dtype=torch.float32))
        # Scalar input standardization, set from training data and persisted
        # with the parameters so the classifier sees the same preprocessing at
        # apply time.  Defaults are the identity transform.
        self.register_buffer("input_mean", torch.zeros(()))
        self.register_buffer("input_std", torch.ones(()))
        self.spatial = nn.ModuleList()
        self.temporal = nn.ModuleList()
        c_in = 3
        for _ in range(n_blocks):
            self.spatial.append(nn.Linear(c_in, channels))
            self.temporal.append(
                nn.Conv1d(channels, channels, temporal_kernel, padding=temporal_kernel // 2)
            )
            c_in = channels
        self.readout = nn.Linear(channels, n_classes)

    def set_input_stats(self, mean: float, std: float):
        """Record scalar standardization statistics of the training inputs."""
        if std <= 0:
            raise BadConfig(f"input std must be positive, got {std}")
        self.input_mean.fill_(float(mean))
        self.input_std.fill_(float(std))

    def forward(self, x: torch.Tensor) -> torch.Tensor:
        _check_batch(x, self.joint_count)
        n, t, d, _ = x.shape
        h = (x - self.input_mean) / self.input_std
        for spatial, temporal in zip(self.spatial, self.temporal):
            h = torch.matmul(self.adjacency, h)
            h = spatial(h)
            c = h.shape[-1]
            h = h.permute(0, 2, 3, 1).reshape(n * d, c, t)
            h = temporal(h)
            h = h.reshape(n, d, c, t).permute(0, 3, 1, 2)
            h = torch.relu(h)
        pooled = h.mean(dim=(1, 2))
        return self.readout(pooled)


BACKBONES = {"toy_gcn": ToyGCN}


def register_backbone(name: str, factory):
    """Register a plug-in classifier backbone; factory(n_classes, topology, **kw)."""
    BACKBONES[name] = factory


def make_classifier(backbone: str, n_classes: int, topology, **kwargs) -> nn.Module:
    if backbone not in BACKBONES:
        raise BadConfig(f"unknown backbone {backbone!r}; known: {sorted(BACKBONES)}")
    return BACKBONES[backbone](n_classes, topology, **kwargs)


# --------------------------------------------------------------------------
# Parameter container


def save_params(module: nn.Module, path: str | Path, variant: str | None = None) -> Path:
    """Write named float32 tensors to the versioned binary container."""
    path = Path(path)
    variant = variant or getattr(module, "variant", "unknown")
    tag = variant.encode()
    chunks = [PARAMS_MAGIC, struct.pack("<IH", PARAMS_VERSION, len(tag)), tag]
    state = module.state_dict()
    chunks.append(struct.pack("<I", len(state)))
    for name, tensor in state.items():
        arr = tensor.detach().cpu().to(torch.float32).numpy()
        name_b = name.encode()
        chunks.append(struct.pack("<H", len(name_b)))
        chunks.append(name_b)
        chunks.append(struct.pack("<B", arr.ndim))
        chunks.append(struct.pack(f"<{arr.ndim}I", *arr.shape))
        chunks.append(np.ascontiguousarray(arr, dtype="<f4").tobytes())
    path.write_bytes(b"".join(chunks))
    return path


class _Reader:
    def __init__(self, blob: bytes):
        self.blob = blob
        self.pos = 0

    def take(self, n: int) -> bytes:
        if self.pos + n > len(self.blob):
            raise CorruptFile(f"truncated parameter file at byte {self.pos}")
        out = self.blob[self.pos : self.pos + n]
        self.pos += n
        return out

    def unpack(self, fmt: str):
        return struct.unpack(fmt, self.take(struct.calcsize(fmt)))


def load_params(path: str | Path) -> tuple[str, dict[str, np.ndarray]]:
    """Read a parameter container; returns (variant_tag, name -> float32 array)."""
    try:
        blob = Path(path).read_bytes()
    except OSError as err:
        raise IoError(f"cannot read parameter file {path}: {err}") from err
    reader = _Reader(blob)
    if reader.take(4) != PARAMS_MAGIC:
        raise CorruptFile("bad magic bytes")
    (version, tag_len) = reader.unpack("<IH")
    if version > PARAMS_VERSION:
        raise VersionMismatch(f"file version {version} newer than supported {PARAMS_VERSION}")
    variant = reader.take(tag_len).decode()
    (n_tensors,) = reader.unpack("<I")
    tensors: dict[str, np.ndarray] = {}
    for _ in range(n_tensors):
        (name_len,) = reader.unpack("<H")
        name = reader.take(name_len).decode()
        (ndim,) = reader.unpack("<B")
        shape = reader.unpack(f"<{ndim}I") if ndim else ()
        count = int(np.prod(shape, dtype=np.int64)) if shape else 1
        data = reader.take(4 * count)
        tensors[name] = np.frombuffer(data, dtype="<f4").reshape(shape)
    if reader.pos != len(reader.blob):
        raise CorruptFile("trailing bytes after tensor table")
    return variant, tensors


def build_from_params(path: str | Path, topology=None, joint_count: int = 25) -> nn.Module:
    """Reconstruct a model from a parameter file, inferring hyperparameters
    from tensor shapes.  Classifier reconstruction needs the bone topology;
    the U-Net needs `joint_count` since its kernels do not encode it."""
    variant, tensors = load_params(path)
    if variant == ResidualAnonymizer.variant:
        hidden, width = tensors["fc1.weight"].shape
        module = ResidualAnonymizer(joint_count=width // 3, hidden=hidden)
    elif variant == UNetAnonymizer.variant:
        base = tensors["enc1.0.weight"].shape[0]
        module = UNetAnonymizer(joint_count=joint_count, base_channels=base)
    elif variant == ToyGCN.variant:
        if topology is None:
            raise ValueError("topology required to rebuild a classifier")
        n_classes, channels = tensors["readout.weight"].shape
        n_blocks = sum(1 for name in tensors if name.startswith("spatial.") and name.endswith(".weight"))
        kernel = tensors["temporal.0.weight"].shape[2]
        module = ToyGCN(
            n_classes,
            topology,
            joint_count=tensors["adjacency"].shape[0],
            channels=channels,
            n_blocks=n_blocks,
            temporal_kernel=kernel,
        )
    else:
        raise CorruptFile(f"unknown variant tag {variant!r}")
    load_params_into(module, path)
    return module


def load_params_into(module: nn.Module, path: str | Path) -> str:
    """Load a container into a module, checking the variant tag and shapes."""
    variant, tensors = load_params(path)
    expected = getattr(module, "variant", variant)
    if variant != expected:
        raise ShapeMismatch(f"parameter file variant {variant!r}, model is {expected!r}")
    state = module.state_dict()
    if set(state) != set(tensors):
        raise CorruptFile("tensor names do not match the model")
    for name, arr in tensors.items():
        if tuple(state[name].shape) != arr.shape:
            raise ShapeMismatch(f"tensor {name} shape {arr.shape} != {tuple(state[name].shape)}")
        state[name] = torch.from_numpy(arr.copy())
    module.load_state_dict(state)
    return variant
