"""Deterministic audio-to-face regressor and the landmark projection.

The generator maps a per-frame audio feature stream to jaw-plus-expression
parameters with temporal convolutions; there is no sampling anywhere, so
the same audio always yields byte-identical face output regardless of any
generation seed. Metrics operate on a fixed 23-channel linear projection
of the 103 face parameters (jaw passed through, expression compressed),
standing in for mesh landmark coordinates.
"""

import copy
from dataclasses import dataclass

import numpy as np
import torch
from torch import nn
from torch.nn import functional as F

from .audio import MFCC_DIM, SPEECH_DIM, AudioFeatureSeq
from .errors import ValidationError
from .motion import FACE_DIM

_FEATURE_DIMS = {"mfcc64": MFCC_DIM, "speech256": SPEECH_DIM}
_LEAK = 0.2
LANDMARK_COUNT = 23
_JAW_DIMS = 3
_PROXY_SEED = 20240117


@dataclass(frozen=True)
class FaceTrainConfig:
    epochs: int = 100
    lr: float = 1e-3
    momentum: float = 0.9
    hidden: int = 128
    layers: int = 6
    seed: int = 0
    feature_kind: str = "mfcc64"

    def __post_init__(self):
        if self.feature_kind not in _FEATURE_DIMS:
            raise ValidationError(f"unknown feature kind {self.feature_kind!r}")
        if self.layers < 1 or self.hidden < 1 or self.epochs < 1:
            raise ValidationError("layers, hidden, and epochs must be positive")


class _ChannelNorm(nn.Module):
    """LayerNorm over the channel axis of (B, C, T) tensors."""

    def __init__(self, channels):
        super().__init__()
        self.weight = nn.Parameter(torch.ones(channels))
        self.bias = nn.Parameter(torch.zeros(channels))

    def forward(self, x):
        y = F.layer_norm(x.transpose(1, 2), (x.shape[1],), self.weight, self.bias)
        return y.transpose(1, 2)


class FaceGenerator(nn.Module):
    def __init__(self, cfg: FaceTrainConfig):
        super().__init__()
        self.cfg = cfg
        self.feature_kind = cfg.feature_kind
        in_dim = _FEATURE_DIMS[cfg.feature_kind]
        blocks = []
        width = in_dim
        for _ in range(cfg.layers):
            blocks += [
                nn.Conv1d(width, cfg.hidden, 3, stride=1, padding=1),
                _ChannelNorm(cfg.hidden),
                nn.LeakyReLU(_LEAK),
            ]
            width = cfg.hidden
        self.net = nn.Sequential(*blocks)
        self.head = nn.Conv1d(cfg.hidden, FACE_DIM, 1)

    def forward(self, x):
        return self.head(self.net(x))


def face_forward(model: FaceGenerator, feats: AudioFeatureSeq) -> np.ndarray:
    """Face parameters (T, 103) for one aligned feature sequence."""
    if feats.kind != model.feature_kind:
        raise ValidationError(
            f"model expects {model.feature_kind!r} features, got {feats.kind!r}"
        )
    model.eval()
    with torch.no_grad():
        x = torch.from_numpy(feats.frames.T[None])
        out = model(x)[0].T
    return out.numpy().astype(np.float32)


def _pairs_to_tensors(pairs, feature_dim):
    tensors = []
    for feats, face in pairs:
        f = np.asarray(feats, dtype=np.float32)
        y = np.asarray(face, dtype=np.float32)
        if f.ndim != 2 or f.shape[1] != feature_dim:
            raise ValidationError(f"features must be (T, {feature_dim}), got {f.shape}")
        if y.shape != (f.shape[0], FACE_DIM):
            raise ValidationError(
                f"face must be ({f.shape[0]}, {FACE_DIM}), got {y.shape}"
            )
        tensors.append((torch.from_numpy(f.T[None]), torch.from_numpy(y.T[None])))
    return tensors


def face_train(train_pairs, val_pairs, cfg: FaceTrainConfig):
    """SGD over whole clips, one clip per step; keeps the best-validation epoch.

    Returns (model, history) where history rows carry per-epoch train and
    validation MSE. A non-finite loss aborts immediately rather than letting
    a diverged model reach disk.
    """
    feature_dim = _FEATURE_DIMS[cfg.feature_kind]
    train = _pairs_to_tensors(train_pairs, feature_dim)
    val = _pairs_to_tensors(val_pairs, feature_dim)
    if not train or not val:
        raise ValidationError("need non-empty train and val sets")
    torch.manual_seed(cfg.seed)
    model = FaceGenerator(cfg)
    opt = torch.optim.SGD(model.parameters(), lr=cfg.lr, momentum=cfg.momentum)
    rng = np.random.default_rng(cfg.seed)
    best_val = np.inf
    best_state = None
    history = []
    for epoch in range(cfg.epochs):
        model.train()
        train_sum = 0.0
        for i in rng.permutation(len(train)):
            x, y = train[i]
            loss = torch.mean((model(x) - y) ** 2)
            if not torch.isfinite(loss):
                raise RuntimeError(
                    f"face training diverged at epoch {epoch}: non-finite loss; "
                    "lower the learning rate"
                )
            opt.zero_grad()
            loss.backward()
            opt.step()
            train_sum += loss.item()
        val_mse = face_eval_mse(model, val)
        history.append(
            {"epoch": epoch, "train_mse": train_sum / len(train), "val_mse": val_mse}
        )
        if val_mse < best_val:
            best_val = val_mse
            best_state = copy.deepcopy(model.state_dict())
    model.load_state_dict(best_state)
    model.eval()
    return model, history


@torch.no_grad()
def face_eval_mse(model, pairs):
    """Mean squared error over (already tensorized or raw) feature/face pairs."""
    if pairs and not torch.is_tensor(pairs[0][0]):
        pairs = _pairs_to_tensors(pairs, _FEATURE_DIMS[model.feature_kind])
    model.eval()
    total = 0.0
    count = 0
    for x, y in pairs:
        err = (model(x) - y) ** 2
        total += torch.sum(err).item()
        count += err.numel()
    return total / count


def landmark_projection() -> np.ndarray:
    """Fixed (23, 103) projection: jaw rows verbatim, 20 expression mixes."""
    proj = np.zeros((LANDMARK_COUNT, FACE_DIM), dtype=np.float64)
    proj[:_JAW_DIMS, :_JAW_DIMS] = np.eye(_JAW_DIMS)
    rng = np.random.default_rng(_PROXY_SEED)
    rows = rng.normal(0.0, 1.0, (LANDMARK_COUNT - _JAW_DIMS, FACE_DIM - _JAW_DIMS))
    rows /= np.linalg.norm(rows, axis=1, keepdims=True)
    proj[_JAW_DIMS:, _JAW_DIMS:] = rows
    return proj


def landmark_proxy(face: np.ndarray) -> np.ndarray:
    """(T, 103) face parameters to (T, 23) landmark proxy channels."""
    face = np.asarray(face, dtype=np.float64)
    if face.ndim != 2 or face.shape[1] != FACE_DIM:
        raise ValidationError(f"face must be (T, {FACE_DIM}), got {face.shape}")
    return face @ landmark_projection().T
