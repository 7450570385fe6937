"""End-to-end synthesis: waveform in, holistic motion out.

The face comes from the deterministic regressor, so it never varies with
the sampling seed; body and hand come from prior samples decoded through
their codebooks. All networks are fully convolutional, so clips of any
length run in one pass (code steps cover the audio in blocks of four
frames, with edge padding when the frame count is not a multiple of four).
"""

from dataclasses import dataclass

import numpy as np
import torch

from .audio import Waveform, align_to_frames, mfcc
from .errors import ValidationError
from .face import FaceGenerator, face_forward
from .motion import MotionSequence, SpeakerId
from .prior import ArModel, ar_sample
from .vq import TEMPORAL_RATE, VqModel


@dataclass(frozen=True)
class GenerateConfig:
    speaker: int = 0
    seed: int = 0
    samples: int = 4
    temperature: float = 1.0

    def __post_init__(self):
        if self.samples < 1:
            raise ValidationError("samples must be positive")
        if self.temperature < 0:
            raise ValidationError("temperature must be >= 0 (0 means greedy)")


@dataclass
class GeneratorBundle:
    face: FaceGenerator
    vq_body: VqModel
    vq_hand: VqModel
    prior: ArModel


def prior_audio_tensor(feats):
    """(1, D, ceil(T/4)*4) audio frames, edge-padded to whole code steps."""
    frames = feats.frames
    t = frames.shape[0]
    steps = -(-t // TEMPORAL_RATE)
    padded = frames
    if steps * TEMPORAL_RATE != t:
        pad = np.repeat(frames[-1:], steps * TEMPORAL_RATE - t, axis=0)
        padded = np.concatenate([frames, pad], axis=0)
    return torch.from_numpy(padded.T[None].copy())


def generate_motion(
    bundle: GeneratorBundle,
    waveform: Waveform,
    speaker: SpeakerId,
    seed: int = 0,
    temperature: float = 1.0,
    greedy: bool = False,
) -> MotionSequence:
    """One motion sample for one clip; fully determined by (inputs, seed)."""
    feats = mfcc(waveform)
    t = feats.num_frames
    face = face_forward(bundle.face, align_to_frames(feats, t))
    audio = prior_audio_tensor(feats)
    speaker_t = torch.tensor([speaker.index], dtype=torch.int64)
    body_idx, hand_idx = ar_sample(
        bundle.prior, audio, speaker_t, temperature=temperature, greedy=greedy, seed=seed
    )
    with torch.no_grad():
        body = bundle.vq_body.decode_indices(body_idx)[0].T.numpy()
        hand = bundle.vq_hand.decode_indices(hand_idx)[0].T.numpy()
    return MotionSequence(
        face.astype(np.float32),
        body[:t].astype(np.float32),
        hand[:t].astype(np.float32),
        feats.frame_rate,
    )
