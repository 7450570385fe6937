import numpy as np
import pytest
import torch

from speechmotion.errors import ValidationError
from speechmotion.prior import (
    ArConfig,
    ArModel,
    ar_logits,
    ar_sample,
    ar_train,
    joint_log_prob,
    perplexity,
)

K = 6


def tiny_cfg(**kw):
    base = dict(
        codebook_size=K,
        n_speakers=3,
        layers=3,
        channels=16,
        embed_dim=8,
        cond_dim=4,
        audio_hidden=8,
        audio_dim=5,
        window=8,
    )
    base.update(kw)
    return ArConfig(**base)


def tiny_model(seed=0, **kw):
    torch.manual_seed(seed)
    return ArModel(tiny_cfg(**kw)).eval()


def random_inputs(steps=6, batch=1, seed=0):
    rng = np.random.default_rng(seed)
    b = torch.from_numpy(rng.integers(0, K, (batch, steps)))
    h = torch.from_numpy(rng.integers(0, K, (batch, steps)))
    a = torch.from_numpy(rng.normal(size=(batch, 5, steps * 4)).astype(np.float32))
    spk = torch.from_numpy(rng.integers(0, 3, (batch,)))
    return b, h, a, spk


def test_config_validation():
    with pytest.raises(ValidationError):
        tiny_cfg(codebook_size=1)
    with pytest.raises(ValidationError):
        tiny_cfg(kernel=1)
    with pytest.raises(ValidationError):
        tiny_cfg(window=9)


def test_logit_shapes_and_input_checks():
    m = tiny_model()
    b, h, a, spk = random_inputs()
    lb, lh = ar_logits(m, b, h, a, spk)
    assert lb.shape == (1, 6, K)
    assert lh.shape == (1, 6, K)
    with pytest.raises(ValidationError):
        m(b, h[:, :5], a, spk)
    with pytest.raises(ValidationError):
        m(b, h, a[:, :, :20], spk)


def test_future_inputs_never_change_past_logits():
    m = tiny_model(1)
    b, h, a, spk = random_inputs(steps=7, seed=2)
    with torch.no_grad():
        lb0, lh0 = m(b, h, a, spk)
    rng = np.random.default_rng(3)
    for t in range(6):
        b2, h2, a2 = b.clone(), h.clone(), a.clone()
        b2[0, t + 1 :] = (b[0, t + 1 :] + 1 + rng.integers(K - 1)) % K
        h2[0, t + 1 :] = (h[0, t + 1 :] + 1 + rng.integers(K - 1)) % K
        a2[0, :, (t + 1) * 4 :] += float(rng.normal() * 5)
        with torch.no_grad():
            lb1, lh1 = m(b2, h2, a2, spk)
        assert torch.equal(lb0[0, : t + 1], lb1[0, : t + 1])
        assert torch.equal(lh0[0, : t + 1], lh1[0, : t + 1])


def test_current_step_conditioning_structure():
    m = tiny_model(2)
    b, h, a, spk = random_inputs(steps=6, seed=4)
    with torch.no_grad():
        lb0, lh0 = m(b, h, a, spk)
    t = 3
    b2 = b.clone()
    b2[0, t] = (b[0, t] + 1) % K
    with torch.no_grad():
        lb1, lh1 = m(b2, h, a, spk)
    assert torch.equal(lb0[0, t], lb1[0, t])  # body head blind to its own current code
    assert not torch.equal(lh0[0, t], lh1[0, t])  # hand head sees current body code
    h2 = h.clone()
    h2[0, t] = (h[0, t] + 1) % K
    with torch.no_grad():
        _, lh2 = m(b, h2, a, spk)
    assert torch.equal(lh0[0, t], lh2[0, t])  # hand head blind to current hand code


def test_independent_variant_has_no_cross_talk():
    m = tiny_model(3, cross_cond=False)
    b, h, a, spk = random_inputs(steps=6, seed=5)
    with torch.no_grad():
        lb0, lh0 = m(b, h, a, spk)
    b2 = (b + 1) % K
    h2 = (h + 2) % K
    with torch.no_grad():
        _, lh1 = m(b2, h, a, spk)
        lb1, _ = m(b, h2, a, spk)
    assert torch.equal(lh0, lh1)  # hand logits never see body codes
    assert torch.equal(lb0, lb1)  # body logits never see hand codes


def test_joint_log_prob_normalizes():
    torch.manual_seed(7)
    cfg = tiny_cfg(codebook_size=3)
    m = ArModel(cfg).double().eval()
    a = torch.from_numpy(np.random.default_rng(0).normal(size=(1, 5, 8)))
    spk = torch.tensor([0])
    logps = []
    with torch.no_grad():
        for b0 in range(3):
            for b1 in range(3):
                for h0 in range(3):
                    for h1 in range(3):
                        lp = joint_log_prob(
                            m,
                            torch.tensor([[b0, b1]]),
                            torch.tensor([[h0, h1]]),
                            a,
                            spk,
                        )
                        logps.append(lp.item())
    assert np.exp(logps).sum() == pytest.approx(1.0, abs=1e-9)


def test_receptive_field_and_dtype_follow_model():
    m = tiny_model()
    assert m.receptive_field_steps == 1 + 3 * 1
    md = tiny_model().double()
    b, h, a, spk = random_inputs()
    lb, _ = md(b, h, a, spk)
    assert lb.dtype == torch.float64


def test_sampling_determinism_and_temperature():
    m = tiny_model(5)
    _, _, a, _ = random_inputs(steps=5, seed=8)
    spk = torch.tensor([1])
    b1, h1 = ar_sample(m, a, spk, temperature=1.0, seed=11)
    b2, h2 = ar_sample(m, a, spk, temperature=1.0, seed=11)
    b3, h3 = ar_sample(m, a, spk, temperature=1.0, seed=12)
    assert torch.equal(b1, b2) and torch.equal(h1, h2)
    assert not (torch.equal(b1, b3) and torch.equal(h1, h3))
    g1 = ar_sample(m, a, spk, greedy=True, seed=1)
    g2 = ar_sample(m, a, spk, greedy=True, seed=2)
    assert torch.equal(g1[0], g2[0]) and torch.equal(g1[1], g2[1])
    assert b1.shape == (1, 5)


def test_sampling_matches_teacher_forced_distribution_support():
    m = tiny_model(6)
    _, _, a, _ = random_inputs(steps=4, seed=9)
    spk = torch.tensor([0])
    b, h = ar_sample(m, a, spk, temperature=1.0, seed=0)
    assert int(b.min()) >= 0 and int(b.max()) < K
    assert int(h.min()) >= 0 and int(h.max()) < K


def test_sampling_validation():
    m = tiny_model()
    _, _, a, _ = random_inputs(steps=4)
    with pytest.raises(ValidationError):
        ar_sample(m, a, torch.tensor([0]), temperature=0.0)
    with pytest.raises(ValidationError):
        ar_sample(m, a.repeat(2, 1, 1), torch.tensor([0, 1]), temperature=1.0)


def make_entries(n=12, steps=5, seed=0):
    rng = np.random.default_rng(seed)
    return {
        "body": torch.from_numpy(rng.integers(0, K, (n, steps))),
        "hand": torch.from_numpy(rng.integers(0, K, (n, steps))),
        "audio": torch.from_numpy(rng.normal(size=(n, 5, steps * 4)).astype(np.float32)),
        "speaker": torch.from_numpy(rng.integers(0, 3, (n,))),
    }


def test_train_reduces_nll_and_is_deterministic():
    entries = make_entries()
    cfg = tiny_cfg(epochs=8, batch_size=6, lr=1e-2, window=20)
    m1, h1 = ar_train(entries, cfg)
    m2, h2 = ar_train(entries, cfg)
    assert h1[-1]["nll_per_code"] < h1[0]["nll_per_code"]
    assert h1 == h2
    s1, s2 = m1.state_dict(), m2.state_dict()
    assert all(torch.equal(s1[k], s2[k]) for k in s1)
    with pytest.raises(ValidationError):
        ar_train({k: v[:0] for k, v in entries.items()}, cfg)


def test_perplexity_of_untrained_model_near_uniform():
    m = tiny_model(8)
    entries = make_entries(n=6, seed=3)
    ppl = perplexity(m, entries)
    assert 1.0 < ppl < 3.0 * K
