"""Waveform loading and frame-aligned audio features (MFCC, interpolation).

All functions here are pure: same input, bit-identical output, no hidden
state. Feature matrices are float32, time along axis 0.
"""

from dataclasses import dataclass, field
from math import gcd

import numpy as np
import scipy.fft
import scipy.io.wavfile
import scipy.signal

from .errors import ValidationError

TARGET_SAMPLE_RATE = 22050
MFCC_DIM = 64
SPEECH_DIM = 256
MFCC_WINDOW_SECONDS = 0.025
_SILENCE_VAR_FLOOR = 1e-12
_LOG_FLOOR = 1e-10


@dataclass(frozen=True)
class Waveform:
    """Mono amplitude sequence at a fixed sample rate."""

    samples: np.ndarray
    sample_rate: int = TARGET_SAMPLE_RATE

    def __post_init__(self):
        samples = np.asarray(self.samples, dtype=np.float64)
        if samples.ndim != 1:
            raise ValidationError(f"waveform must be mono 1-D, got shape {samples.shape}")
        if samples.size == 0:
            raise ValidationError("waveform is empty")
        if not np.all(np.isfinite(samples)):
            raise ValidationError("waveform contains non-finite samples")
        if self.sample_rate <= 0:
            raise ValidationError(f"sample_rate must be positive, got {self.sample_rate}")
        object.__setattr__(self, "samples", samples)

    @property
    def duration(self):
        return self.samples.size / self.sample_rate


@dataclass(frozen=True)
class AudioFeatureSeq:
    """T x D feature matrix aligned to a nominal frame rate.

    ``kind`` fixes D: "mfcc64" -> 64, "speech256" -> 256. ``replicated`` is
    set when a single-frame input had to be tiled by align_to_frames.
    """

    frames: np.ndarray
    frame_rate: float = 30.0
    kind: str = "mfcc64"
    replicated: bool = field(default=False, compare=False)

    _DIMS = {"mfcc64": MFCC_DIM, "speech256": SPEECH_DIM}

    def __post_init__(self):
        frames = np.asarray(self.frames, dtype=np.float32)
        if frames.ndim != 2:
            raise ValidationError(f"features must be 2-D (T, D), got shape {frames.shape}")
        if self.kind not in self._DIMS:
            raise ValidationError(f"unknown feature kind {self.kind!r}")
        want = self._DIMS[self.kind]
        if frames.shape[1] != want:
            raise ValidationError(
                f"kind {self.kind!r} requires D={want}, got D={frames.shape[1]}"
            )
        if not np.all(np.isfinite(frames)):
            raise ValidationError("features contain non-finite entries")
        object.__setattr__(self, "frames", frames)

    @property
    def num_frames(self):
        return self.frames.shape[0]

    @property
    def dim(self):
        return self.frames.shape[1]


def load_waveform(path) -> Waveform:
    """Read a PCM WAV file, resample to 22050 Hz, standardize amplitude.

    Stereo input is downmixed by channel mean. Output has zero mean; unit
    variance scaling is skipped for (near-)silent clips to avoid dividing
    by zero.
    """
    try:
        rate, data = scipy.io.wavfile.read(path)
    except FileNotFoundError:
        raise
    except Exception as exc:
        raise OSError(f"unreadable WAV file {path!r}: {exc}") from exc
    if data.size == 0:
        raise ValidationError(f"zero-length audio in {path!r}")
    data = np.asarray(data)
    if np.issubdtype(data.dtype, np.integer):
        scale = float(np.iinfo(data.dtype).max) + 1.0
        samples = data.astype(np.float64) / scale
    else:
        samples = data.astype(np.float64)
    if samples.ndim == 2:
        samples = samples.mean(axis=1)
    if rate != TARGET_SAMPLE_RATE:
        g = gcd(int(rate), TARGET_SAMPLE_RATE)
        samples = scipy.signal.resample_poly(samples, TARGET_SAMPLE_RATE // g, int(rate) // g)
    return standardize(Waveform(samples, TARGET_SAMPLE_RATE))


def standardize(w: Waveform) -> Waveform:
    """Zero-mean, unit-variance copy; variance scaling skipped for silence."""
    samples = w.samples - w.samples.mean()
    var = samples.var()
    if var >= _SILENCE_VAR_FLOOR:
        samples = samples / np.sqrt(var)
    return Waveform(samples, w.sample_rate)


def mel_filterbank(n_filters, n_fft, sample_rate):
    """Triangular mel filterbank matrix (n_filters, n_fft // 2 + 1)."""

    def hz_to_mel(f):
        return 2595.0 * np.log10(1.0 + np.asarray(f, dtype=np.float64) / 700.0)

    def mel_to_hz(m):
        return 700.0 * (10.0 ** (np.asarray(m, dtype=np.float64) / 2595.0) - 1.0)

    n_bins = n_fft // 2 + 1
    fft_freqs = np.linspace(0.0, sample_rate / 2.0, n_bins)
    mel_pts = np.linspace(hz_to_mel(0.0), hz_to_mel(sample_rate / 2.0), n_filters + 2)
    hz_pts = mel_to_hz(mel_pts)
    bank = np.zeros((n_filters, n_bins), dtype=np.float64)
    for i in range(n_filters):
        left, center, right = hz_pts[i], hz_pts[i + 1], hz_pts[i + 2]
        up = (fft_freqs - left) / max(center - left, 1e-12)
        down = (right - fft_freqs) / max(right - center, 1e-12)
        bank[i] = np.maximum(0.0, np.minimum(up, down))
    return bank


def mfcc(w: Waveform, frame_rate: float = 30.0) -> AudioFeatureSeq:
    """64-dim MFCCs with one frame per motion frame.

    Hop is sample_rate / frame_rate samples (must divide evenly); the
    analysis window is 25 ms starting at each hop, so the frame count is
    exactly floor(duration * frame_rate).
    """
    if frame_rate <= 0:
        raise ValidationError(f"frame_rate must be positive, got {frame_rate}")
    hop_f = w.sample_rate / frame_rate
    hop = int(round(hop_f))
    if abs(hop_f - hop) > 1e-9 or hop <= 0:
        raise ValidationError(
            f"frame_rate {frame_rate} does not give an integer hop at {w.sample_rate} Hz"
        )
    win_length = int(round(MFCC_WINDOW_SECONDS * w.sample_rate))
    n = w.samples.size
    n_frames = n // hop
    if n < win_length or n_frames == 0:
        raise ValidationError(
            f"audio too short for analysis: {n} samples < one {win_length}-sample window"
        )
    starts = np.arange(n_frames) * hop
    idx = starts[:, None] + np.arange(win_length)[None, :]
    frames = w.samples[idx] * np.hanning(win_length)[None, :]
    n_fft = 1 << (win_length - 1).bit_length()
    power = np.abs(np.fft.rfft(frames, n=n_fft, axis=1)) ** 2
    bank = mel_filterbank(MFCC_DIM, n_fft, w.sample_rate)
    logmel = np.log(power @ bank.T + _LOG_FLOOR)
    coeffs = scipy.fft.dct(logmel, type=2, axis=1, norm="ortho")
    return AudioFeatureSeq(coeffs.astype(np.float32), frame_rate, "mfcc64")


def align_to_frames(f: AudioFeatureSeq, t_target: int) -> AudioFeatureSeq:
    """Linearly interpolate a feature sequence along time to t_target frames.

    A single-frame input is replicated and flagged via ``replicated``.
    """
    if t_target < 1:
        raise ValidationError(f"t_target must be >= 1, got {t_target}")
    t = f.num_frames
    if t == 0:
        raise ValidationError("cannot align an empty feature sequence")
    if t == t_target:
        return f
    if t == 1:
        frames = np.repeat(f.frames, t_target, axis=0)
        return AudioFeatureSeq(frames, f.frame_rate, f.kind, replicated=True)
    pos = np.linspace(0.0, t - 1, t_target)
    lo = np.floor(pos).astype(np.int64)
    lo = np.minimum(lo, t - 2)
    frac = (pos - lo)[:, None]
    src = f.frames.astype(np.float64)
    out = (1.0 - frac) * src[lo] + frac * src[lo + 1]
    return AudioFeatureSeq(out.astype(np.float32), f.frame_rate, f.kind)
