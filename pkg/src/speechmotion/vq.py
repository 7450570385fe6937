"""Vector-quantized autoencoders over body and hand pose streams.

The encoder downsamples time by 4, so a length-T window becomes T/4 code
vectors; body and hand get separate codebooks (a joint variant over the
concatenated streams exists as a baseline). Code selection is done in
float64 with an explicit near-tie refinement so the chosen index always
equals a direct distance-comparison argmin, lowest index winning ties.
"""

import warnings
from dataclasses import dataclass

import numpy as np
import torch
from torch import nn

from .errors import ValidationError
from .motion import BODY_DIM, HAND_DIM

PART_DIMS = {"body": BODY_DIM, "hand": HAND_DIM, "joint": BODY_DIM + HAND_DIM}
TEMPORAL_RATE = 4
_LEAK = 0.2


@dataclass(frozen=True)
class VqConfig:
    part: str = "body"
    codebook_size: int = 256
    code_dim: int = 64
    hidden: int = 48
    window: int = 88
    stride: int = 44
    epochs: int = 100
    lr: float = 1e-4
    beta: float = 0.25
    batch_size: int = 128
    seed: int = 0

    def __post_init__(self):
        if self.part not in PART_DIMS:
            raise ValidationError(f"part must be one of {sorted(PART_DIMS)}, got {self.part!r}")
        if self.window % TEMPORAL_RATE != 0:
            raise ValidationError(f"window must be divisible by {TEMPORAL_RATE}")
        if self.codebook_size < 2:
            raise ValidationError("codebook needs at least two entries")
        if not 0.0 < self.beta:
            raise ValidationError("beta must be positive")


def part_frames(motion, part):
    if part == "body":
        return motion.body
    if part == "hand":
        return motion.hand
    if part == "joint":
        return motion.body_hand()
    raise ValidationError(f"unknown part {part!r}")


def nearest_code(vectors, codebook):
    """Index of the nearest codebook row per vector, exact under float64.

    Distances are expanded through a matrix product for speed, then every
    index whose expanded distance falls within a conservative floating-point
    slack of the row minimum is re-scored by the direct squared difference.
    The result provably matches a per-row direct argmin (first occurrence).
    """
    v = np.ascontiguousarray(vectors, dtype=np.float64)
    c = np.ascontiguousarray(codebook, dtype=np.float64)
    if v.ndim != 2 or c.ndim != 2 or v.shape[1] != c.shape[1]:
        raise ValidationError(
            f"shape mismatch: vectors {np.shape(vectors)}, codebook {np.shape(codebook)}"
        )
    vv = np.einsum("nd,nd->n", v, v)
    cc = np.einsum("kd,kd->k", c, c)
    d = vv[:, None] - 2.0 * (v @ c.T) + cc[None, :]
    eps = np.finfo(np.float64).eps
    slack = 12.0 * (v.shape[1] + 2) * eps * (vv[:, None] + cc[None, :] + 1.0)
    out = np.empty(v.shape[0], dtype=np.int64)
    dmin = d.min(axis=1)
    for i in range(v.shape[0]):
        cand = np.nonzero(d[i] <= dmin[i] + slack[i])[0]
        if cand.size == 1:
            out[i] = cand[0]
        else:
            exact = ((v[i][None, :] - c[cand]) ** 2).sum(axis=1)
            out[i] = cand[np.argmin(exact)]
    return out


class _ResBlock(nn.Module):
    def __init__(self, channels):
        super().__init__()
        layers = []
        for _ in range(3):
            layers += [
                nn.Conv1d(channels, channels, 3, stride=1, padding=1),
                nn.BatchNorm1d(channels),
                nn.LeakyReLU(_LEAK),
            ]
        self.body = nn.Sequential(*layers)

    def forward(self, x):
        return x + self.body(x)


class _Encoder(nn.Module):
    """Three residual blocks with two stride-2 stages between them."""

    def __init__(self, in_dim, hidden, code_dim):
        super().__init__()
        self.net = nn.Sequential(
            nn.Conv1d(in_dim, hidden, 3, stride=1, padding=1),
            _ResBlock(hidden),
            nn.Conv1d(hidden, hidden, 4, stride=2, padding=1),
            nn.BatchNorm1d(hidden),
            nn.LeakyReLU(_LEAK),
            _ResBlock(hidden),
            nn.Conv1d(hidden, hidden, 4, stride=2, padding=1),
            nn.BatchNorm1d(hidden),
            nn.LeakyReLU(_LEAK),
            _ResBlock(hidden),
            nn.Conv1d(hidden, code_dim, 3, stride=1, padding=1),
        )

    def forward(self, x):
        return self.net(x)


class _Decoder(nn.Module):
    def __init__(self, code_dim, hidden, out_dim):
        super().__init__()
        self.net = nn.Sequential(
            nn.Conv1d(code_dim, hidden, 3, stride=1, padding=1),
            _ResBlock(hidden),
            nn.ConvTranspose1d(hidden, hidden, 4, stride=2, padding=1),
            nn.BatchNorm1d(hidden),
            nn.LeakyReLU(_LEAK),
            _ResBlock(hidden),
            nn.ConvTranspose1d(hidden, hidden, 4, stride=2, padding=1),
            nn.BatchNorm1d(hidden),
            nn.LeakyReLU(_LEAK),
            _ResBlock(hidden),
            nn.Conv1d(hidden, out_dim, 3, stride=1, padding=1),
        )

    def forward(self, z):
        return self.net(z)


@dataclass
class VqOutput:
    recon: torch.Tensor
    z_e: torch.Tensor
    z_q: torch.Tensor
    indices: torch.Tensor


class VqModel(nn.Module):
    def __init__(self, cfg: VqConfig):
        super().__init__()
        self.cfg = cfg
        in_dim = PART_DIMS[cfg.part]
        self.encoder = _Encoder(in_dim, cfg.hidden, cfg.code_dim)
        self.decoder = _Decoder(cfg.code_dim, cfg.hidden, in_dim)
        self.codebook = nn.Embedding(cfg.codebook_size, cfg.code_dim)

    @property
    def temporal_rate(self):
        return TEMPORAL_RATE

    def encode(self, x):
        if x.shape[-1] % TEMPORAL_RATE != 0:
            raise ValidationError(
                f"input length {x.shape[-1]} not divisible by {TEMPORAL_RATE}"
            )
        return self.encoder(x)

    def quantize(self, z_e):
        b, d, t = z_e.shape
        flat = z_e.detach().permute(0, 2, 1).reshape(-1, d).cpu().numpy()
        book = self.codebook.weight.detach().cpu().numpy()
        idx = nearest_code(flat, book)
        indices = torch.from_numpy(idx.reshape(b, t))
        z_q = self.codebook(indices).permute(0, 2, 1)
        return indices, z_q

    def decode(self, z):
        return self.decoder(z)

    def decode_indices(self, indices):
        z_q = self.codebook(indices).permute(0, 2, 1)
        return self.decode(z_q)

    def forward(self, x):
        z_e = self.encode(x)
        indices, z_q = self.quantize(z_e)
        z_st = z_e + (z_q - z_e).detach()
        return VqOutput(self.decode(z_st), z_e, z_q, indices)


@dataclass
class VqLoss:
    total: torch.Tensor
    recon: torch.Tensor
    codebook: torch.Tensor
    commit: torch.Tensor


def vq_loss(x, out: VqOutput, beta: float) -> VqLoss:
    """Reconstruction plus codebook/commitment terms with stop-gradients."""
    recon = torch.mean((out.recon - x) ** 2)
    codebook = torch.mean((out.z_q - out.z_e.detach()) ** 2)
    commit = torch.mean((out.z_e - out.z_q.detach()) ** 2)
    return VqLoss(recon + codebook + beta * commit, recon, codebook, commit)


def windows_to_tensor(windows, part):
    if not windows:
        raise ValidationError("no windows to train on")
    arrays = [part_frames(w.motion, part) for w in windows]
    lengths = {a.shape[0] for a in arrays}
    if len(lengths) != 1:
        raise ValidationError(f"windows disagree on length: {sorted(lengths)}")
    x = np.stack(arrays).astype(np.float32)
    return torch.from_numpy(x).permute(0, 2, 1)


def train_vqvae(windows, cfg: VqConfig):
    """Train one quantized autoencoder; returns the model and loss history."""
    x_all = windows_to_tensor(windows, cfg.part)
    if x_all.shape[-1] != cfg.window:
        raise ValidationError(
            f"windows have {x_all.shape[-1]} frames, config expects {cfg.window}"
        )
    torch.manual_seed(cfg.seed)
    model = VqModel(cfg)
    opt = torch.optim.Adam(model.parameters(), lr=cfg.lr, betas=(0.9, 0.999))
    rng = np.random.default_rng(cfg.seed)
    n = x_all.shape[0]
    history = []
    model.train()
    for _ in range(cfg.epochs):
        perm = rng.permutation(n)
        sums = np.zeros(4)
        batches = 0
        for start in range(0, n, cfg.batch_size):
            x = x_all[perm[start : start + cfg.batch_size]]
            out = model(x)
            loss = vq_loss(x, out, cfg.beta)
            opt.zero_grad()
            loss.total.backward()
            opt.step()
            sums += [
                loss.total.item(),
                loss.recon.item(),
                loss.codebook.item(),
                loss.commit.item(),
            ]
            batches += 1
        history.append(
            {
                "total": sums[0] / batches,
                "recon": sums[1] / batches,
                "codebook": sums[2] / batches,
                "commit": sums[3] / batches,
            }
        )
    model.eval()
    used = codebook_usage(model, x_all)
    if used < max(2, 0.05 * cfg.codebook_size):
        warnings.warn(
            f"codebook collapse: only {used}/{cfg.codebook_size} codes in use",
            stacklevel=2,
        )
    return model, history


@torch.no_grad()
def codebook_usage(model, x):
    model.eval()
    seen = set()
    for start in range(0, x.shape[0], 256):
        out = model(x[start : start + 256])
        seen.update(out.indices.reshape(-1).tolist())
    return len(seen)


@torch.no_grad()
def encode_indices(model, x):
    """Code indices for a batch of windows, shape (B, T/4)."""
    model.eval()
    z_e = model.encode(x)
    indices, _ = model.quantize(z_e)
    return indices


@torch.no_grad()
def reconstruction_error(model, x):
    """Mean squared error per frame per dimension over a batch."""
    model.eval()
    total = 0.0
    count = 0
    for start in range(0, x.shape[0], 256):
        chunk = x[start : start + 256]
        out = model(chunk)
        total += torch.sum((out.recon - chunk) ** 2).item()
        count += chunk.numel()
    return total / count
