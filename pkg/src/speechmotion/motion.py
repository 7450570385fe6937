"""Holistic motion representation, dataset splitting, and windowing."""

import warnings
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .audio import AudioFeatureSeq, Waveform
from .errors import ValidationError

FACE_DIM = 103  # jaw orientation (3) + expression (100)
BODY_DIM = 63
HAND_DIM = 90
FPS = 30.0
WINDOW_FRAMES = 88
SPLIT_RATIOS = (0.8, 0.1, 0.1)


def _check_part(name, arr, dim):
    arr = np.asarray(arr, dtype=np.float32)
    if arr.ndim != 2 or arr.shape[1] != dim:
        raise ValidationError(f"{name} must be (T, {dim}), got shape {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise ValidationError(f"{name} contains non-finite entries")
    return arr


@dataclass(frozen=True)
class MotionSequence:
    """Per-frame face/body/hand parameter streams sharing one time axis."""

    face: np.ndarray
    body: np.ndarray
    hand: np.ndarray
    fps: float = FPS

    def __post_init__(self):
        face = _check_part("face", self.face, FACE_DIM)
        body = _check_part("body", self.body, BODY_DIM)
        hand = _check_part("hand", self.hand, HAND_DIM)
        if not (face.shape[0] == body.shape[0] == hand.shape[0]):
            raise ValidationError(
                f"parts disagree on frame count: face {face.shape[0]}, "
                f"body {body.shape[0]}, hand {hand.shape[0]}"
            )
        if self.fps <= 0:
            raise ValidationError(f"fps must be positive, got {self.fps}")
        object.__setattr__(self, "face", face)
        object.__setattr__(self, "body", body)
        object.__setattr__(self, "hand", hand)

    @property
    def num_frames(self):
        return self.face.shape[0]

    def slice(self, start, stop):
        return MotionSequence(
            self.face[start:stop], self.body[start:stop], self.hand[start:stop], self.fps
        )

    def body_hand(self):
        """Concatenated (T, 153) body+hand frames used by metrics and baselines."""
        return np.concatenate([self.body, self.hand], axis=1)


@dataclass(frozen=True)
class SpeakerId:
    index: int
    n_speakers: int

    def __post_init__(self):
        if not 0 <= self.index < self.n_speakers:
            raise ValidationError(
                f"speaker index {self.index} outside [0, {self.n_speakers})"
            )

    def one_hot(self):
        v = np.zeros(self.n_speakers, dtype=np.float32)
        v[self.index] = 1.0
        return v


@dataclass(frozen=True)
class Sample:
    """One corpus item: audio, its motion, and the speaker who produced it."""

    waveform: Waveform
    motion: MotionSequence
    speaker: SpeakerId
    id: str

    def __post_init__(self):
        expected = int(np.floor(self.waveform.duration * self.motion.fps))
        if abs(expected - self.motion.num_frames) > 1:
            raise ValidationError(
                f"sample {self.id!r}: audio implies {expected} frames, "
                f"motion has {self.motion.num_frames}"
            )


@dataclass(frozen=True)
class DatasetSplit:
    train: tuple
    val: tuple
    test: tuple
    ratios: tuple = SPLIT_RATIOS

    def membership(self):
        return {"train": set(self.train), "val": set(self.val), "test": set(self.test)}


def split_dataset(samples, seed: int) -> DatasetSplit:
    """Deterministic 80/10/10 split of sample ids given a seed."""
    ids = [s.id for s in samples]
    if len(set(ids)) != len(ids):
        raise ValidationError("duplicate sample ids")
    if len(ids) < 10:
        raise ValidationError(f"need at least 10 samples to split, got {len(ids)}")
    order = np.random.default_rng(seed).permutation(sorted(ids))
    n = len(ids)
    n_train = int(np.floor(SPLIT_RATIOS[0] * n))
    n_val = int(np.floor(SPLIT_RATIOS[1] * n))
    return DatasetSplit(
        train=tuple(order[:n_train]),
        val=tuple(order[n_train : n_train + n_val]),
        test=tuple(order[n_train + n_val :]),
    )


@dataclass(frozen=True)
class Window:
    """A fixed-length training window; audio frames share motion frame indices."""

    motion: MotionSequence
    audio: Optional[AudioFeatureSeq]
    start: int


def segment(
    m: MotionSequence,
    a: Optional[AudioFeatureSeq],
    length: int = WINDOW_FRAMES,
    stride: Optional[int] = None,
):
    """Cut aligned motion/audio into windows of exactly `length` frames.

    Trailing frames that do not fill a window are dropped. Sequences
    shorter than one window yield an empty list and a warning.
    """
    if length < 1:
        raise ValidationError(f"window length must be >= 1, got {length}")
    stride = length if stride is None else stride
    if stride < 1:
        raise ValidationError(f"stride must be >= 1, got {stride}")
    if a is not None and a.num_frames != m.num_frames:
        raise ValidationError(
            f"audio not aligned to motion: {a.num_frames} vs {m.num_frames} frames"
        )
    if m.num_frames < length:
        warnings.warn(
            f"sequence of {m.num_frames} frames shorter than window {length}; no windows",
            stacklevel=2,
        )
        return []
    windows = []
    for start in range(0, m.num_frames - length + 1, stride):
        audio_win = None
        if a is not None:
            audio_win = AudioFeatureSeq(
                a.frames[start : start + length], a.frame_rate, a.kind
            )
        windows.append(Window(m.slice(start, start + length), audio_win, start))
    return windows
