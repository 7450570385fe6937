import numpy as np
import pytest
import torch

from speechmotion.audio import AudioFeatureSeq, Waveform
from speechmotion.errors import ValidationError
from speechmotion.face import FaceGenerator, FaceTrainConfig
from speechmotion.generate import (
    GenerateConfig,
    GeneratorBundle,
    generate_motion,
    prior_audio_tensor,
)
from speechmotion.motion import SpeakerId
from speechmotion.prior import ArConfig, ArModel
from speechmotion.vq import VqConfig, VqModel


@pytest.fixture(scope="module")
def bundle():
    torch.manual_seed(0)
    face = FaceGenerator(FaceTrainConfig(hidden=12, layers=2))
    vq_body = VqModel(VqConfig(part="body", codebook_size=8, code_dim=8, hidden=8))
    vq_hand = VqModel(VqConfig(part="hand", codebook_size=8, code_dim=8, hidden=8))
    prior = ArModel(
        ArConfig(
            codebook_size=8,
            n_speakers=2,
            layers=2,
            channels=16,
            embed_dim=8,
            cond_dim=4,
            audio_hidden=8,
            audio_dim=64,
            window=8,
        )
    )
    return GeneratorBundle(face, vq_body, vq_hand, prior)


@pytest.fixture(scope="module")
def clip():
    rng = np.random.default_rng(42)
    t = np.arange(22050) / 22050.0
    samples = np.sin(2 * np.pi * 220.0 * t) * (0.5 + 0.4 * np.sin(2 * np.pi * 1.3 * t))
    samples += rng.normal(0.0, 0.01, samples.size)
    return Waveform(samples)


def test_config_validation():
    with pytest.raises(ValidationError):
        GenerateConfig(samples=0)
    with pytest.raises(ValidationError):
        GenerateConfig(temperature=-0.5)
    GenerateConfig(temperature=0.0)


def test_prior_audio_tensor_pads_to_code_steps():
    frames = np.arange(10 * 64, dtype=np.float32).reshape(10, 64)
    feats = AudioFeatureSeq(frames=frames, kind="mfcc64")
    out = prior_audio_tensor(feats)
    assert out.shape == (1, 64, 12)
    assert torch.equal(out[0, :, 10], out[0, :, 9])
    assert torch.equal(out[0, :, 11], out[0, :, 9])
    exact = AudioFeatureSeq(frames=frames[:8], kind="mfcc64")
    assert prior_audio_tensor(exact).shape == (1, 64, 8)


def test_generated_motion_shapes(bundle, clip):
    speaker = SpeakerId(0, 2)
    motion = generate_motion(bundle, clip, speaker, seed=0)
    assert motion.face.shape == (30, 103)
    assert motion.body.shape == (30, 63)
    assert motion.hand.shape == (30, 90)
    assert motion.fps == 30.0
    for part in (motion.face, motion.body, motion.hand):
        assert part.dtype == np.float32
        assert np.all(np.isfinite(part))


def test_same_seed_reproduces_everything(bundle, clip):
    speaker = SpeakerId(1, 2)
    m1 = generate_motion(bundle, clip, speaker, seed=7)
    m2 = generate_motion(bundle, clip, speaker, seed=7)
    assert np.array_equal(m1.face, m2.face)
    assert np.array_equal(m1.body, m2.body)
    assert np.array_equal(m1.hand, m2.hand)


def test_face_ignores_seed_while_limbs_resample(bundle, clip):
    speaker = SpeakerId(0, 2)
    motions = [generate_motion(bundle, clip, speaker, seed=s) for s in range(4)]
    for m in motions[1:]:
        assert np.array_equal(motions[0].face, m.face)
    limbs_differ = any(
        not np.array_equal(motions[0].body, m.body)
        or not np.array_equal(motions[0].hand, m.hand)
        for m in motions[1:]
    )
    assert limbs_differ


def test_greedy_decode_is_seed_independent(bundle, clip):
    speaker = SpeakerId(0, 2)
    m1 = generate_motion(bundle, clip, speaker, seed=1, greedy=True)
    m2 = generate_motion(bundle, clip, speaker, seed=99, greedy=True)
    assert np.array_equal(m1.body, m2.body)
    assert np.array_equal(m1.hand, m2.hand)


def test_temperature_changes_sampling(bundle, clip):
    speaker = SpeakerId(0, 2)
    hot = generate_motion(bundle, clip, speaker, seed=3, temperature=10.0)
    cold = generate_motion(bundle, clip, speaker, seed=3, temperature=0.05)
    assert not (
        np.array_equal(hot.body, cold.body) and np.array_equal(hot.hand, cold.hand)
    )
