import numpy as np
import pytest
import torch

from speechmotion.audio import Waveform
from speechmotion.embed import (
    ConvEmbeddingBackend,
    EmbeddingBackend,
    UnavailableBackend,
    speech_embedding,
)
from speechmotion.errors import BackendUnavailableError, ValidationError


@pytest.fixture(scope="module")
def backend():
    return ConvEmbeddingBackend(seed=0)


def test_hop_and_receptive_field(backend):
    assert backend.hop_samples == 5 * 4 * 4 * 4
    # strided stack: 1 + 9 + 7*5 + 7*20 + 7*80, then two kernel-3 mixes at jump 320
    assert backend.receptive_field_samples == 1 + 9 + 35 + 140 + 560 + 2 * 2 * 320


def test_embedding_shape_and_rate(backend):
    w = Waveform(np.random.default_rng(0).normal(0.0, 0.1, 22050))
    feats = speech_embedding(w, backend)
    assert feats.kind == "speech256"
    assert feats.frames.shape[1] == 256
    assert feats.frame_rate == pytest.approx(22050 / 320)
    # unpadded convs: frame count is fixed by the conv arithmetic
    expected = 22050
    for _, kernel, stride in [(64, 10, 5), (128, 8, 4), (256, 8, 4), (768, 8, 4)]:
        expected = (expected - kernel) // stride + 1
    expected -= 2 * 2  # two kernel-3 mixing convs
    assert feats.frames.shape[0] == expected


def test_embedding_is_deterministic_per_seed():
    w = Waveform(np.random.default_rng(1).normal(0.0, 0.1, 8000))
    a = ConvEmbeddingBackend(seed=3).embed(w)
    b = ConvEmbeddingBackend(seed=3).embed(w)
    c = ConvEmbeddingBackend(seed=4).embed(w)
    assert np.array_equal(a.frames, b.frames)
    assert not np.array_equal(a.frames, c.frames)


def test_frames_depend_only_on_their_receptive_field(backend):
    rng = np.random.default_rng(2)
    samples = rng.normal(0.0, 0.1, 6000)
    base = backend.embed(Waveform(samples)).frames
    changed = samples.copy()
    cut = backend.receptive_field_samples
    changed[cut:] = rng.normal(0.0, 0.1, changed.size - cut)
    out = backend.embed(Waveform(changed)).frames
    assert np.array_equal(base[0], out[0])
    assert not np.array_equal(base[-1], out[-1])


def test_too_short_audio_is_rejected(backend):
    with pytest.raises(ValidationError, match="receptive field"):
        backend.embed(Waveform(np.zeros(100)))


def test_unavailable_backend_raises_with_name():
    stub = UnavailableBackend("external-speech-model")
    assert isinstance(stub, EmbeddingBackend)
    with pytest.raises(BackendUnavailableError, match="external-speech-model"):
        speech_embedding(Waveform(np.zeros(4000)), stub)


def test_conv_backend_satisfies_protocol(backend):
    assert isinstance(backend, EmbeddingBackend)
