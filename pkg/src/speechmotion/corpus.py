"""Synthetic speech/motion corpus with analytically known structure.

Each clip is a sum of three sinusoids shaped by a piecewise amplitude
envelope. Face parameters are an exact affine function of that envelope
(shared across speakers), so a perfect audio-to-face regressor exists.
Body and hand frames are convex combinations drawn from small per-speaker
prototype pools; prototype switches happen at the same onsets as envelope
level changes, and the hand prototype copies the body prototype with a
configurable probability, which ties the two streams together.
"""

import json
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np
from scipy.io import wavfile

from .audio import TARGET_SAMPLE_RATE, Waveform
from .errors import FormatError, ValidationError
from .motion import (
    BODY_DIM,
    FACE_DIM,
    HAND_DIM,
    DatasetSplit,
    MotionSequence,
    Sample,
    SpeakerId,
    split_dataset,
)
from .motionfile import read_blocks, write_blocks

_PARTIALS = (1.0, 2.3, 3.7)
_PARTIAL_AMPS = (1.0, 0.5, 0.3)


@dataclass(frozen=True)
class CorpusConfig:
    n_samples: int = 200
    n_speakers: int = 4
    seed: int = 1234
    min_duration: float = 3.0
    max_duration: float = 10.0
    fps: float = 30.0
    sample_rate: int = TARGET_SAMPLE_RATE
    n_prototypes: int = 8
    hand_follow_prob: float = 0.75
    sway_amp: float = 0.2
    ramp_frames: int = 6
    min_segment_frames: int = 12
    max_segment_frames: int = 45

    def __post_init__(self):
        if self.n_samples < 10:
            raise ValidationError("need at least 10 samples")
        if self.n_speakers < 1:
            raise ValidationError("need at least one speaker")
        if not 0 < self.min_duration < self.max_duration:
            raise ValidationError("duration range must satisfy 0 < min < max")
        if self.sample_rate % int(self.fps) != 0:
            raise ValidationError("sample_rate must be a multiple of fps")
        if self.n_prototypes < 2:
            raise ValidationError("need at least two prototypes per pool")
        if not 0.0 <= self.hand_follow_prob <= 1.0:
            raise ValidationError("hand_follow_prob must lie in [0, 1]")
        if not 0.0 <= self.sway_amp < 0.5:
            raise ValidationError("sway_amp must lie in [0, 0.5)")
        if not 1 <= self.ramp_frames < self.min_segment_frames:
            raise ValidationError("ramp_frames must fit inside the shortest segment")
        if self.min_segment_frames > self.max_segment_frames:
            raise ValidationError("segment frame range inverted")

    @property
    def hop(self):
        return int(self.sample_rate // self.fps)


@dataclass(frozen=True)
class Corpus:
    config: CorpusConfig
    samples: tuple
    envs: dict = field(compare=False)
    face_w: np.ndarray = field(compare=False)
    face_b: np.ndarray = field(compare=False)
    body_prototypes: np.ndarray = field(compare=False)
    hand_prototypes: np.ndarray = field(compare=False)
    split: DatasetSplit = None


def _segment_plan(rng, n_frames, cfg):
    """Per-segment draws: start frame, envelope level, prototype choices."""
    segs = []
    start = 0
    prev_body = None
    while start < n_frames:
        length = int(rng.integers(cfg.min_segment_frames, cfg.max_segment_frames + 1))
        level = float(rng.uniform(0.25, 1.0))
        if prev_body is None:
            body = int(rng.integers(cfg.n_prototypes))
        else:
            others = [k for k in range(cfg.n_prototypes) if k != prev_body]
            body = int(others[rng.integers(len(others))])
        if rng.random() < cfg.hand_follow_prob:
            hand = body
        else:
            hand = int(rng.integers(cfg.n_prototypes))
        partner_b = int((body + 1 + rng.integers(cfg.n_prototypes - 1)) % cfg.n_prototypes)
        partner_h = int((hand + 1 + rng.integers(cfg.n_prototypes - 1)) % cfg.n_prototypes)
        period_b = int(rng.integers(20, 41))
        period_h = int(rng.integers(20, 41))
        segs.append(
            {
                "start": start,
                "level": level,
                "body": body,
                "hand": hand,
                "partner_b": partner_b,
                "partner_h": partner_h,
                "period_b": period_b,
                "period_h": period_h,
            }
        )
        prev_body = body
        start += length
    return segs


def _raised_cosine(n):
    return 0.5 - 0.5 * np.cos(np.pi * (np.arange(n) + 1) / n)


def _piecewise_track(segs, n_frames, cfg, key_value, key_partner, key_period, protos):
    """Assemble frames that crossfade between prototypes and sway in the hold.

    Every frame is a convex combination of at most two prototypes, so each
    dimension stays inside the prototype pool's coordinate-wise range.
    """
    dim = protos.shape[1]
    out = np.zeros((n_frames, dim), dtype=np.float64)
    for i, seg in enumerate(segs):
        start = seg["start"]
        stop = segs[i + 1]["start"] if i + 1 < len(segs) else n_frames
        stop = min(stop, n_frames)
        cur = protos[seg[key_value]]
        t = np.arange(stop - start, dtype=np.float64)
        sway = cfg.sway_amp * (0.5 - 0.5 * np.cos(2.0 * np.pi * t / seg[key_period]))
        mix = sway[:, None] * protos[seg[key_partner]] + (1.0 - sway)[:, None] * cur
        if i > 0:
            prev = protos[segs[i - 1][key_value]]
            n_ramp = min(cfg.ramp_frames, stop - start)
            alpha = _raised_cosine(n_ramp)
            mix[:n_ramp] = (1.0 - alpha)[:, None] * prev + alpha[:, None] * cur
        out[start:stop] = mix
    return out


def _envelope(segs, n_frames, cfg):
    env = np.zeros(n_frames, dtype=np.float64)
    for i, seg in enumerate(segs):
        start = seg["start"]
        stop = segs[i + 1]["start"] if i + 1 < len(segs) else n_frames
        stop = min(stop, n_frames)
        env[start:stop] = seg["level"]
        if i > 0:
            n_ramp = min(cfg.ramp_frames, stop - start)
            alpha = _raised_cosine(n_ramp)
            env[start : start + n_ramp] = (
                (1.0 - alpha) * segs[i - 1]["level"] + alpha * seg["level"]
            )
    return env


def synth_corpus(cfg: CorpusConfig) -> Corpus:
    rng = np.random.default_rng(cfg.seed)
    face_w = rng.normal(0.0, 0.5, FACE_DIM)
    face_b = rng.normal(0.0, 0.1, FACE_DIM)
    body_protos = rng.normal(0.0, 1.0, (cfg.n_speakers, cfg.n_prototypes, BODY_DIM))
    hand_protos = rng.normal(0.0, 1.0, (cfg.n_speakers, cfg.n_prototypes, HAND_DIM))

    samples = []
    envs = {}
    hop = cfg.hop
    for idx in range(cfg.n_samples):
        speaker = idx % cfg.n_speakers
        duration = rng.uniform(cfg.min_duration, cfg.max_duration)
        n_frames = int(np.floor(duration * cfg.fps))
        n = n_frames * hop
        segs = _segment_plan(rng, n_frames, cfg)

        env_frames = _envelope(segs, n_frames, cfg)
        env_samples = np.interp(
            np.arange(n, dtype=np.float64), np.arange(n_frames) * hop, env_frames
        )
        f0 = 110.0 * (1.15**speaker)
        t = np.arange(n, dtype=np.float64) / cfg.sample_rate
        phases = rng.uniform(0.0, 2.0 * np.pi, len(_PARTIALS))
        carrier = np.zeros(n, dtype=np.float64)
        for amp, ratio, phase in zip(_PARTIAL_AMPS, _PARTIALS, phases):
            carrier += amp * np.sin(2.0 * np.pi * f0 * ratio * t + phase)
        raw = env_samples * carrier
        scale = np.sqrt(np.var(raw))
        wave = (raw - np.mean(raw)) / scale

        env_final = env_frames / scale
        face = env_final[:, None] * face_w[None, :] + face_b[None, :]
        body = _piecewise_track(
            segs, n_frames, cfg, "body", "partner_b", "period_b", body_protos[speaker]
        )
        hand = _piecewise_track(
            segs, n_frames, cfg, "hand", "partner_h", "period_h", hand_protos[speaker]
        )

        sample_id = f"clip{idx:04d}"
        motion = MotionSequence(face, body, hand, cfg.fps)
        samples.append(
            Sample(
                waveform=Waveform(wave, cfg.sample_rate),
                motion=motion,
                speaker=SpeakerId(speaker, cfg.n_speakers),
                id=sample_id,
            )
        )
        envs[sample_id] = env_final
    split = split_dataset(samples, cfg.seed)
    return Corpus(
        config=cfg,
        samples=tuple(samples),
        envs=envs,
        face_w=face_w,
        face_b=face_b,
        body_prototypes=body_protos,
        hand_prototypes=hand_protos,
        split=split,
    )


def write_corpus(corpus: Corpus, root):
    """Write wavs, motion containers, shared assets, and the corpus manifest."""
    root = Path(root)
    (root / "audio").mkdir(parents=True, exist_ok=True)
    (root / "motion").mkdir(parents=True, exist_ok=True)
    for sample in corpus.samples:
        wavfile.write(
            root / "audio" / f"{sample.id}.wav",
            sample.waveform.sample_rate,
            sample.waveform.samples.astype(np.float32),
        )
        env = corpus.envs[sample.id].astype(np.float32)[:, None]
        write_blocks(
            root / "motion" / f"{sample.id}.hm1",
            {
                "face": sample.motion.face,
                "body": sample.motion.body,
                "hand": sample.motion.hand,
                "env": env,
            },
            corpus.config.fps,
            {
                "speaker_index": sample.speaker.index,
                "n_speakers": sample.speaker.n_speakers,
            },
        )
    np.savez(
        root / "corpus_assets.npz",
        face_w=corpus.face_w,
        face_b=corpus.face_b,
        body_prototypes=corpus.body_prototypes,
        hand_prototypes=corpus.hand_prototypes,
    )
    manifest = {
        "config": asdict(corpus.config),
        "ids": [s.id for s in corpus.samples],
        "speakers": {s.id: s.speaker.index for s in corpus.samples},
        "split": {
            "train": list(corpus.split.train),
            "val": list(corpus.split.val),
            "test": list(corpus.split.test),
        },
    }
    with open(root / "corpus.json", "w") as f:
        json.dump(manifest, f, indent=2, sort_keys=True)
    return root


def load_corpus(root):
    """Load a written corpus back into Samples plus split and shared assets."""
    root = Path(root)
    manifest_path = root / "corpus.json"
    if not manifest_path.exists():
        raise FormatError(f"no corpus manifest at {manifest_path}")
    with open(manifest_path) as f:
        manifest = json.load(f)
    cfg = CorpusConfig(**manifest["config"])
    samples = []
    envs = {}
    for sample_id in manifest["ids"]:
        rate, wave = wavfile.read(root / "audio" / f"{sample_id}.wav")
        blocks, fps, meta = read_blocks(root / "motion" / f"{sample_id}.hm1")
        motion = MotionSequence(blocks["face"], blocks["body"], blocks["hand"], fps)
        speaker = SpeakerId(int(meta["speaker_index"]), int(meta["n_speakers"]))
        samples.append(
            Sample(
                waveform=Waveform(np.asarray(wave, dtype=np.float64), rate),
                motion=motion,
                speaker=speaker,
                id=sample_id,
            )
        )
        if "env" in blocks:
            envs[sample_id] = blocks["env"][:, 0].astype(np.float64)
    split = DatasetSplit(
        train=tuple(manifest["split"]["train"]),
        val=tuple(manifest["split"]["val"]),
        test=tuple(manifest["split"]["test"]),
    )
    assets = dict(np.load(root / "corpus_assets.npz"))
    return Corpus(
        config=cfg,
        samples=tuple(samples),
        envs=envs,
        face_w=assets["face_w"],
        face_b=assets["face_b"],
        body_prototypes=assets["body_prototypes"],
        hand_prototypes=assets["hand_prototypes"],
        split=split,
    )
