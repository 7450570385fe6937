"""Evaluation metrics and the serialized metric report.

Face accuracy uses the fixed landmark projection: L2 is the mean absolute
difference per landmark channel, LVD the mean per-frame norm of velocity
differences. Variation is temporal variance (ddof 0) averaged over
dimensions; its cross-seed counterpart measures how much resampling moves
the output. Realism comes from a small binary discriminator: the score is
its mean sigmoid output, so held-out real clips land near 0.5 when the
training sets are indistinguishable.
"""

import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
import torch
from torch import nn

from .errors import FormatError, ValidationError
from .face import landmark_proxy

_LEAK = 0.2


def _check_same(a, b):
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    if a.shape != b.shape:
        raise ValidationError(f"shape mismatch: {a.shape} vs {b.shape}")
    if a.ndim != 2:
        raise ValidationError(f"expected (T, D) arrays, got {a.ndim}-D")
    return a, b


def l2_landmark(pred_face, gt_face):
    """Mean absolute landmark-channel difference between two face streams."""
    p, g = _check_same(landmark_proxy(pred_face), landmark_proxy(gt_face))
    return float(np.mean(np.abs(p - g)))


def lvd(pred_face, gt_face):
    """Landmark velocity difference: mean over frames of the velocity-error norm."""
    p, g = _check_same(landmark_proxy(pred_face), landmark_proxy(gt_face))
    if p.shape[0] < 2:
        raise ValidationError("need at least two frames for velocities")
    dv = np.diff(p, axis=0) - np.diff(g, axis=0)
    return float(np.mean(np.linalg.norm(dv, axis=1)))


def variation(frames):
    """Temporal variance per dimension, averaged over dimensions."""
    x = np.asarray(frames, dtype=np.float64)
    if x.ndim != 2 or x.shape[0] < 1:
        raise ValidationError(f"expected non-empty (T, D), got {x.shape}")
    return float(np.mean(np.var(x, axis=0)))


def mean_variation(seqs):
    if not seqs:
        raise ValidationError("no sequences")
    return float(np.mean([variation(s) for s in seqs]))


def cross_seed_variation(stacked):
    """Variance across same-clip resamples, averaged over frames and dims.

    stacked is (S, T, D): S generations of one clip under different seeds.
    """
    x = np.asarray(stacked, dtype=np.float64)
    if x.ndim != 3 or x.shape[0] < 2:
        raise ValidationError(f"expected (S>=2, T, D), got {x.shape}")
    return float(np.mean(np.var(x, axis=0)))


class Discriminator(nn.Module):
    """Tiny conv net scoring body+hand windows as real (1) or generated (0)."""

    def __init__(self, in_dim, hidden=32):
        super().__init__()
        self.net = nn.Sequential(
            nn.Conv1d(in_dim, hidden, 4, stride=2, padding=1),
            nn.LeakyReLU(_LEAK),
            nn.Conv1d(hidden, hidden, 4, stride=2, padding=1),
            nn.LeakyReLU(_LEAK),
            nn.Conv1d(hidden, hidden, 3, stride=1, padding=1),
            nn.LeakyReLU(_LEAK),
        )
        self.head = nn.Linear(hidden, 1)

    def forward(self, x):
        return self.head(self.net(x).mean(dim=2))[:, 0]


def _to_tensor(arrays):
    if len(arrays) == 0:
        raise ValidationError("no windows")
    x = np.stack([np.asarray(a, dtype=np.float32) for a in arrays])
    return torch.from_numpy(x).permute(0, 2, 1)


def train_discriminator(real, fake, seed=0, epochs=30, lr=1e-3, batch_size=64):
    """Fit real-vs-generated on equal-length (T, D) windows."""
    xr, xf = _to_tensor(real), _to_tensor(fake)
    if xr.shape[1:] != xf.shape[1:]:
        raise ValidationError(
            f"real and fake windows disagree on shape: {tuple(xr.shape[1:])} "
            f"vs {tuple(xf.shape[1:])}"
        )
    x = torch.cat([xr, xf])
    y = torch.cat([torch.ones(xr.shape[0]), torch.zeros(xf.shape[0])])
    torch.manual_seed(seed)
    disc = Discriminator(x.shape[1])
    opt = torch.optim.Adam(disc.parameters(), lr=lr)
    rng = np.random.default_rng(seed)
    loss_fn = nn.BCEWithLogitsLoss()
    disc.train()
    for _ in range(epochs):
        perm = rng.permutation(x.shape[0])
        for start in range(0, x.shape[0], batch_size):
            sel = perm[start : start + batch_size]
            loss = loss_fn(disc(x[sel]), y[sel])
            opt.zero_grad()
            loss.backward()
            opt.step()
    disc.eval()
    return disc


@torch.no_grad()
def realism_score(disc, windows):
    """Mean sigmoid output of the discriminator over (T, D) windows."""
    disc.eval()
    x = _to_tensor(windows)
    return float(torch.sigmoid(disc(x)).mean().item())


@dataclass(frozen=True)
class MetricReport:
    values: dict
    context: dict = field(default_factory=dict)

    def __post_init__(self):
        for key, val in self.values.items():
            if not np.isfinite(val):
                raise ValidationError(f"metric {key!r} is not finite: {val}")

    def to_json(self):
        payload = {
            "values": {k: float(v) for k, v in sorted(self.values.items())},
            "context": dict(sorted(self.context.items())),
        }
        return json.dumps(payload, indent=2, sort_keys=True)

    def save(self, path):
        path = Path(path)
        path.parent.mkdir(parents=True, exist_ok=True)
        path.write_text(self.to_json() + "\n")
        return path

    @classmethod
    def load(cls, path):
        try:
            payload = json.loads(Path(path).read_text())
            return cls(values=payload["values"], context=payload.get("context", {}))
        except (json.JSONDecodeError, KeyError, TypeError) as exc:
            raise FormatError(f"bad metric report at {path}: {exc}") from exc
