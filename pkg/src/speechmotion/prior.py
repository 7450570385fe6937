"""Autoregressive prior over paired body/hand code sequences.

Per code step t, the body distribution conditions on both streams' past
codes, audio up to t, and speaker identity; the hand distribution
additionally conditions on the body code just chosen at t. Causality is
structural: code inputs are shifted right by one, every convolution is
left-padded, and no operation mixes information across time, so logits at
step t are bit-for-bit independent of inputs after t.

Both variants use one gated trunk per stream so the cross-conditioning
ablation changes information flow, not capacity: with cross conditioning
each trunk reads both streams' pasts and the hand head also sees the
current body code; without it each trunk reads only its own past and the
hand skip is dropped, giving a fully independent factorization.
"""

from dataclasses import dataclass

import numpy as np
import torch
from torch import nn
from torch.nn import functional as F

from .errors import ValidationError
from .vq import TEMPORAL_RATE

_LEAK = 0.2


@dataclass(frozen=True)
class ArConfig:
    codebook_size: int = 256
    n_speakers: int = 4
    layers: int = 15
    channels: int = 96
    embed_dim: int = 32
    cond_dim: int = 16
    kernel: int = 2
    audio_hidden: int = 48
    audio_dim: int = 64
    window: int = 88
    epochs: int = 100
    lr: float = 1e-4
    batch_size: int = 128
    seed: int = 0
    cross_cond: bool = True

    def __post_init__(self):
        if self.codebook_size < 2 or self.n_speakers < 1:
            raise ValidationError("codebook_size and n_speakers must be positive")
        if self.kernel < 2:
            raise ValidationError("gated kernel must be at least 2")
        if self.window % TEMPORAL_RATE != 0:
            raise ValidationError(f"window must be divisible by {TEMPORAL_RATE}")


class _CausalConv(nn.Module):
    """Conv1d that only looks left; output step i sees inputs <= i*stride + stride - 1."""

    def __init__(self, in_ch, out_ch, kernel, stride=1):
        super().__init__()
        self.pad = kernel - stride
        self.conv = nn.Conv1d(in_ch, out_ch, kernel, stride=stride)

    def forward(self, x):
        return self.conv(F.pad(x, (self.pad, 0)))


class _CausalResBlock(nn.Module):
    def __init__(self, channels):
        super().__init__()
        self.convs = nn.ModuleList(_CausalConv(channels, channels, 3) for _ in range(3))

    def forward(self, x):
        y = x
        for conv in self.convs:
            y = F.leaky_relu(conv(y), _LEAK)
        return x + y


class _CausalAudioEncoder(nn.Module):
    """Downsamples audio frames by 4 to code rate without looking ahead.

    Code step t therefore summarizes audio frames up to and including
    4t + 3, the last motion frame the step covers. Normalization layers
    are omitted so every operation stays time-local.
    """

    def __init__(self, in_dim, hidden, out_dim):
        super().__init__()
        self.stem = _CausalConv(in_dim, hidden, 3)
        self.block1 = _CausalResBlock(hidden)
        self.down1 = _CausalConv(hidden, hidden, 4, stride=2)
        self.block2 = _CausalResBlock(hidden)
        self.down2 = _CausalConv(hidden, hidden, 4, stride=2)
        self.block3 = _CausalResBlock(hidden)
        self.head = _CausalConv(hidden, out_dim, 3)

    def forward(self, x):
        if x.shape[-1] % TEMPORAL_RATE != 0:
            raise ValidationError(
                f"audio length {x.shape[-1]} not divisible by {TEMPORAL_RATE}"
            )
        y = F.leaky_relu(self.stem(x), _LEAK)
        y = self.block1(y)
        y = F.leaky_relu(self.down1(y), _LEAK)
        y = self.block2(y)
        y = F.leaky_relu(self.down2(y), _LEAK)
        y = self.block3(y)
        return self.head(y)


class _GatedLayer(nn.Module):
    def __init__(self, channels, cond_dim, kernel):
        super().__init__()
        self.conv_f = _CausalConv(channels, channels, kernel)
        self.conv_g = _CausalConv(channels, channels, kernel)
        self.cond_f = nn.Linear(cond_dim, channels)
        self.cond_g = nn.Linear(cond_dim, channels)
        self.proj = nn.Conv1d(channels, channels, 1)

    def forward(self, x, cond):
        f = torch.tanh(self.conv_f(x) + self.cond_f(cond)[:, :, None])
        g = torch.sigmoid(self.conv_g(x) + self.cond_g(cond)[:, :, None])
        return x + self.proj(f * g)


class _Trunk(nn.Module):
    def __init__(self, in_dim, cfg):
        super().__init__()
        self.stem = nn.Conv1d(in_dim, cfg.channels, 1)
        self.layers = nn.ModuleList(
            _GatedLayer(cfg.channels, cfg.cond_dim, cfg.kernel) for _ in range(cfg.layers)
        )

    def forward(self, x, cond):
        y = self.stem(x)
        for layer in self.layers:
            y = layer(y, cond)
        return y


def _head(channels, out_dim):
    return nn.Sequential(
        nn.Conv1d(channels, channels, 1),
        nn.LeakyReLU(_LEAK),
        nn.Conv1d(channels, out_dim, 1),
    )


def _shift_right(idx, start_token):
    b = idx.shape[0]
    start = torch.full((b, 1), start_token, dtype=idx.dtype, device=idx.device)
    return torch.cat([start, idx[:, :-1]], dim=1)


class ArModel(nn.Module):
    def __init__(self, cfg: ArConfig):
        super().__init__()
        self.cfg = cfg
        k = cfg.codebook_size
        self.start_token = k
        self.embed_body = nn.Embedding(k + 1, cfg.embed_dim)
        self.embed_hand = nn.Embedding(k + 1, cfg.embed_dim)
        self.embed_speaker = nn.Embedding(cfg.n_speakers, cfg.cond_dim)
        self.audio_encoder = _CausalAudioEncoder(cfg.audio_dim, cfg.audio_hidden, cfg.channels)
        past_dim = (2 if cfg.cross_cond else 1) * cfg.embed_dim
        self.trunk_body = _Trunk(past_dim + cfg.channels, cfg)
        self.trunk_hand = _Trunk(past_dim + cfg.channels, cfg)
        if cfg.cross_cond:
            self.body_skip = nn.Conv1d(cfg.embed_dim, cfg.channels, 1)
        self.head_body = _head(cfg.channels, k)
        self.head_hand = _head(cfg.channels, k)

    @property
    def receptive_field_steps(self):
        """Code steps of past context a gated trunk output can see."""
        return 1 + self.cfg.layers * (self.cfg.kernel - 1)

    def _check(self, body_idx, hand_idx, audio):
        if body_idx.shape != hand_idx.shape:
            raise ValidationError(
                f"body/hand index shapes differ: {body_idx.shape} vs {hand_idx.shape}"
            )
        if audio.shape[-1] != body_idx.shape[1] * TEMPORAL_RATE:
            raise ValidationError(
                f"audio length {audio.shape[-1]} does not match "
                f"{body_idx.shape[1]} code steps"
            )

    def features(self, body_idx, hand_idx, audio, speaker_idx):
        """Per-stream trunk outputs; depend only on codes before t, audio through t."""
        self._check(body_idx, hand_idx, audio)
        dtype = self.embed_body.weight.dtype
        a = self.audio_encoder(audio.to(dtype))
        cond = self.embed_speaker(speaker_idx)
        prev_b = self.embed_body(_shift_right(body_idx, self.start_token)).transpose(1, 2)
        prev_h = self.embed_hand(_shift_right(hand_idx, self.start_token)).transpose(1, 2)
        if self.cfg.cross_cond:
            xb = torch.cat([prev_b, prev_h, a], dim=1)
            xh = torch.cat([prev_b, prev_h, a], dim=1)
        else:
            xb = torch.cat([prev_b, a], dim=1)
            xh = torch.cat([prev_h, a], dim=1)
        return self.trunk_body(xb, cond), self.trunk_hand(xh, cond)

    def body_logits_from(self, feats):
        return self.head_body(feats[0]).transpose(1, 2)

    def hand_logits_from(self, feats, body_idx):
        if self.cfg.cross_cond:
            cur_b = self.embed_body(body_idx).transpose(1, 2)
            return self.head_hand(feats[1] + self.body_skip(cur_b)).transpose(1, 2)
        return self.head_hand(feats[1]).transpose(1, 2)

    def forward(self, body_idx, hand_idx, audio, speaker_idx):
        """Teacher-forced logits, each (B, steps, codebook_size)."""
        feats = self.features(body_idx, hand_idx, audio, speaker_idx)
        return self.body_logits_from(feats), self.hand_logits_from(feats, body_idx)


def ar_logits(model, body_idx, hand_idx, audio, speaker_idx):
    return model(body_idx, hand_idx, audio, speaker_idx)


def joint_log_prob(model, body_idx, hand_idx, audio, speaker_idx):
    """log p(body, hand | audio, speaker) per batch row, summed over steps."""
    body_logits, hand_logits = model(body_idx, hand_idx, audio, speaker_idx)
    lb = F.log_softmax(body_logits, dim=-1)
    lh = F.log_softmax(hand_logits, dim=-1)
    pick_b = torch.gather(lb, 2, body_idx[:, :, None])[:, :, 0]
    pick_h = torch.gather(lh, 2, hand_idx[:, :, None])[:, :, 0]
    return (pick_b + pick_h).sum(dim=1)


def ar_train(entries, cfg: ArConfig):
    """Train on precomputed (body_idx, hand_idx, audio, speaker) tensors.

    entries is a dict of aligned tensors: body/hand (N, steps) int64,
    audio (N, audio_dim, steps*4) float32, speaker (N,) int64. Returns the
    trained model and per-epoch mean negative log-likelihood per code.
    """
    body, hand = entries["body"], entries["hand"]
    audio, speaker = entries["audio"], entries["speaker"]
    n = body.shape[0]
    if n == 0:
        raise ValidationError("no training entries")
    torch.manual_seed(cfg.seed)
    model = ArModel(cfg)
    opt = torch.optim.Adam(model.parameters(), lr=cfg.lr, betas=(0.9, 0.999))
    rng = np.random.default_rng(cfg.seed)
    history = []
    model.train()
    k = cfg.codebook_size
    for _ in range(cfg.epochs):
        perm = rng.permutation(n)
        total = 0.0
        batches = 0
        for start in range(0, n, cfg.batch_size):
            sel = perm[start : start + cfg.batch_size]
            lb, lh = model(body[sel], hand[sel], audio[sel], speaker[sel])
            loss = F.cross_entropy(lb.reshape(-1, k), body[sel].reshape(-1))
            loss = loss + F.cross_entropy(lh.reshape(-1, k), hand[sel].reshape(-1))
            opt.zero_grad()
            loss.backward()
            opt.step()
            total += loss.item() / 2.0
            batches += 1
        history.append({"nll_per_code": total / batches})
    model.eval()
    return model, history


@torch.no_grad()
def perplexity(model, entries):
    """exp(mean NLL per code) over both streams; lower is better."""
    model.eval()
    body, hand = entries["body"], entries["hand"]
    audio, speaker = entries["audio"], entries["speaker"]
    total = 0.0
    count = 0
    for start in range(0, body.shape[0], 256):
        sel = slice(start, start + 256)
        lp = joint_log_prob(model, body[sel], hand[sel], audio[sel], speaker[sel])
        total += -lp.sum().item()
        count += 2 * body[sel].numel()
    return float(np.exp(total / count))


@torch.no_grad()
def ar_sample(model, audio, speaker_idx, temperature=1.0, greedy=False, seed=0):
    """Draw one (body, hand) code sequence for a full audio clip.

    audio is (1, audio_dim, 4*steps). Greedy takes the argmax at every
    step; otherwise logits are divided by temperature and sampled. The
    generator seed fully determines the draw.
    """
    if not greedy and temperature <= 0:
        raise ValidationError("temperature must be positive unless greedy")
    if audio.shape[0] != 1:
        raise ValidationError("sampling runs one clip at a time")
    model.eval()
    steps = audio.shape[-1] // TEMPORAL_RATE
    gen = torch.Generator().manual_seed(seed)
    body = torch.zeros(1, steps, dtype=torch.int64)
    hand = torch.zeros(1, steps, dtype=torch.int64)
    for t in range(steps):
        feats = model.features(body, hand, audio, speaker_idx)
        lb = model.body_logits_from(feats)[0, t]
        body[0, t] = _draw(lb, temperature, greedy, gen)
        lh = model.hand_logits_from(feats, body)[0, t]
        hand[0, t] = _draw(lh, temperature, greedy, gen)
    return body, hand


def _draw(logits, temperature, greedy, gen):
    if greedy:
        return int(torch.argmax(logits).item())
    probs = F.softmax(logits / temperature, dim=-1)
    return int(torch.multinomial(probs, 1, generator=gen).item())
