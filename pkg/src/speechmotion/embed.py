"""Speech embedding backends for the face path.

The toolkit does not download pretrained speech models. An external
provider can be plugged in through the EmbeddingBackend protocol; the
bundled fallback is a seeded strided convolution stack producing a
768-dim representation that a linear head reduces to 256 dims. The
fallback is deterministic given its parameters and has a finite, known
receptive field (no padding anywhere), which the tests rely on.
"""

from typing import Protocol, runtime_checkable

import numpy as np
import torch
from torch import nn

from .audio import SPEECH_DIM, AudioFeatureSeq, Waveform
from .errors import BackendUnavailableError, ValidationError

_CONV_SPECS = [  # (out_channels, kernel, stride)
    (64, 10, 5),
    (128, 8, 4),
    (256, 8, 4),
    (768, 8, 4),
]
_MIX_KERNEL = 3
_HIDDEN_DIM = 768


@runtime_checkable
class EmbeddingBackend(Protocol):
    def embed(self, w: Waveform) -> AudioFeatureSeq: ...


class ConvEmbeddingBackend(nn.Module):
    """Trainable fallback: 4 strided convs, 2 kernel-3 mixing convs, linear to 256.

    All convolutions are unpadded, so output frame i covers exactly the
    samples [i * hop_samples, i * hop_samples + receptive_field_samples).
    Biases start at zero, which makes the stack positively homogeneous in
    the input amplitude at initialization.
    """

    def __init__(self, seed: int = 0):
        super().__init__()
        gen = torch.Generator().manual_seed(seed)
        convs = []
        in_ch = 1
        for out_ch, kernel, stride in _CONV_SPECS:
            convs.append(nn.Conv1d(in_ch, out_ch, kernel, stride=stride))
            in_ch = out_ch
        convs.append(nn.Conv1d(_HIDDEN_DIM, _HIDDEN_DIM, _MIX_KERNEL))
        convs.append(nn.Conv1d(_HIDDEN_DIM, _HIDDEN_DIM, _MIX_KERNEL))
        self.convs = nn.ModuleList(convs)
        self.proj = nn.Linear(_HIDDEN_DIM, SPEECH_DIM)
        self.act = nn.LeakyReLU(0.2)
        for m in self.modules():
            if isinstance(m, (nn.Conv1d, nn.Linear)):
                nn.init.kaiming_uniform_(m.weight, a=0.2, generator=gen)
                nn.init.zeros_(m.bias)

    @property
    def hop_samples(self):
        hop = 1
        for _, _, stride in _CONV_SPECS:
            hop *= stride
        return hop

    @property
    def receptive_field_samples(self):
        rf, jump = 1, 1
        for _, kernel, stride in _CONV_SPECS:
            rf += (kernel - 1) * jump
            jump *= stride
        rf += 2 * (_MIX_KERNEL - 1) * jump
        return rf

    def forward(self, x):
        for conv in self.convs:
            x = self.act(conv(x))
        return self.proj(x.transpose(1, 2))

    @torch.no_grad()
    def embed(self, w: Waveform) -> AudioFeatureSeq:
        if w.samples.size < self.receptive_field_samples:
            raise ValidationError(
                f"audio too short for embedding: {w.samples.size} samples "
                f"< receptive field {self.receptive_field_samples}"
            )
        self.eval()
        x = torch.from_numpy(w.samples.astype(np.float32)).view(1, 1, -1)
        rate = w.sample_rate / self.hop_samples
        frames = self.forward(x)[0].numpy()
        return AudioFeatureSeq(frames, frame_rate=rate, kind="speech256")


class UnavailableBackend:
    """Placeholder for an external provider that is not installed."""

    def __init__(self, name: str):
        self.name = name

    def embed(self, w: Waveform) -> AudioFeatureSeq:
        raise BackendUnavailableError(
            f"speech embedding backend {self.name!r} is unavailable; "
            "pass the bundled ConvEmbeddingBackend instead"
        )


def speech_embedding(w: Waveform, backend: EmbeddingBackend) -> AudioFeatureSeq:
    """Embed a waveform to a 256-dim feature sequence at the backend's rate."""
    return backend.embed(w)
