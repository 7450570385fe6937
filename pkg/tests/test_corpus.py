import numpy as np
import pytest

from speechmotion.corpus import CorpusConfig, load_corpus, synth_corpus, write_corpus
from speechmotion.errors import FormatError, ValidationError


def small_cfg(**kw):
    base = dict(n_samples=12, n_speakers=2, min_duration=3.0, max_duration=4.0, seed=5)
    base.update(kw)
    return CorpusConfig(**base)


@pytest.fixture(scope="module")
def corpus():
    return synth_corpus(small_cfg())


def test_config_validation():
    with pytest.raises(ValidationError):
        small_cfg(n_samples=0)
    with pytest.raises(ValidationError):
        small_cfg(min_duration=5.0, max_duration=4.0)
    with pytest.raises(ValidationError):
        small_cfg(sample_rate=22051)  # not an integer number of samples per frame
    with pytest.raises(ValidationError):
        small_cfg(hand_follow_prob=1.5)


def test_corpus_shapes_and_population(corpus):
    assert len(corpus.samples) == 12
    speakers = {s.speaker.index for s in corpus.samples}
    assert speakers == {0, 1}
    for s in corpus.samples:
        t = s.motion.num_frames
        assert 89 <= t <= 120  # 3 to 4 seconds at 30 fps
        assert s.waveform.samples.size == t * 735
        assert s.motion.face.shape == (t, 103)
        assert s.motion.body.shape == (t, 63)
        assert s.motion.hand.shape == (t, 90)
    total = len(corpus.split.train) + len(corpus.split.val) + len(corpus.split.test)
    assert total == 12


def test_face_is_exact_affine_image_of_envelope(corpus):
    for s in corpus.samples:
        env = corpus.envs[s.id]
        want = (env[:, None] * corpus.face_w[None, :] + corpus.face_b[None, :]).astype(
            np.float32
        )
        assert np.array_equal(s.motion.face, want)


def test_waveform_is_standardized(corpus):
    for s in corpus.samples:
        assert np.mean(s.waveform.samples) == pytest.approx(0.0, abs=1e-12)
        assert np.var(s.waveform.samples) == pytest.approx(1.0, rel=1e-9)


def test_limbs_stay_inside_prototype_hull(corpus):
    # every frame is a convex mix of prototypes, so each coordinate is bounded
    # by the prototype extremes per speaker
    for s in corpus.samples:
        k = s.speaker.index
        for frames, protos in (
            (s.motion.body, corpus.body_prototypes[k]),
            (s.motion.hand, corpus.hand_prototypes[k]),
        ):
            lo = protos.min(axis=0) - 1e-5
            hi = protos.max(axis=0) + 1e-5
            assert np.all(frames >= lo) and np.all(frames <= hi)


def test_limbs_move(corpus):
    for s in corpus.samples:
        assert np.var(s.motion.body, axis=0).mean() > 1e-4
        assert np.var(s.motion.hand, axis=0).mean() > 1e-4


def test_synthesis_is_seed_deterministic():
    a = synth_corpus(small_cfg())
    b = synth_corpus(small_cfg())
    c = synth_corpus(small_cfg(seed=6))
    for sa, sb in zip(a.samples, b.samples):
        assert np.array_equal(sa.waveform.samples, sb.waveform.samples)
        assert np.array_equal(sa.motion.face, sb.motion.face)
        assert np.array_equal(sa.motion.body, sb.motion.body)
    assert not np.array_equal(
        a.samples[0].waveform.samples, c.samples[0].waveform.samples
    )


def test_speakers_have_distinct_pitch(corpus):
    by_speaker = {}
    for s in corpus.samples:
        by_speaker.setdefault(s.speaker.index, s.waveform.samples)
    spectra = {}
    for k, wave in by_speaker.items():
        mag = np.abs(np.fft.rfft(wave[: 2**15]))
        freqs = np.fft.rfftfreq(2**15, 1.0 / 22050)
        spectra[k] = freqs[np.argmax(mag)]
    assert spectra[1] > spectra[0] * 1.05


def test_write_and_load_round_trip(tmp_path, corpus):
    root = write_corpus(corpus, tmp_path / "corpus")
    back = load_corpus(root)
    assert [s.id for s in back.samples] == [s.id for s in corpus.samples]
    assert back.split.train == corpus.split.train
    assert back.split.test == corpus.split.test
    for sa, sb in zip(corpus.samples, back.samples):
        assert sb.speaker.index == sa.speaker.index
        assert np.array_equal(sa.motion.face, sb.motion.face)
        assert np.array_equal(sa.motion.body, sb.motion.body)
        assert np.array_equal(sa.motion.hand, sb.motion.hand)
        # wav stores float32, so audio is close rather than identical
        assert np.allclose(sa.waveform.samples, sb.waveform.samples, atol=1e-6)
    assert np.array_equal(back.face_w, corpus.face_w)
    assert np.array_equal(back.body_prototypes, corpus.body_prototypes)


def test_load_without_manifest_fails(tmp_path):
    with pytest.raises(FormatError, match="manifest"):
        load_corpus(tmp_path)
