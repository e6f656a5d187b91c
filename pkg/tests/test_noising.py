import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from qdecomp.noising import NoiseConfig, local_shuffle, noise_tokens, word_dropout
from qdecomp.rng import substream

TOKENS = [f"t{i}" for i in range(20)]


def test_config_validation():
    with pytest.raises(ValueError):
        NoiseConfig(mask_prob=-0.1)
    with pytest.raises(ValueError):
        NoiseConfig(drop_prob=1.5)
    with pytest.raises(ValueError):
        NoiseConfig(shuffle_window=-1)
    NoiseConfig(mask_prob=0.0, drop_prob=0.0, shuffle_window=0)  # all-off is legal


@given(st.lists(st.integers(0, 9), max_size=30), st.integers(0, 5), st.integers(0, 2 ** 31))
@settings(max_examples=200)
def test_shuffle_displacement_bounded_and_multiset_preserved(vals, window, seed):
    tokens = [str(v) for v in vals]
    # tag positions so identical tokens stay distinguishable
    tagged = [f"{t}#{i}" for i, t in enumerate(tokens)]
    out = local_shuffle(tagged, window, np.random.default_rng(seed))
    assert sorted(out) == sorted(tagged)
    for new_pos, tok in enumerate(out):
        old_pos = int(tok.rsplit("#", 1)[1])
        assert abs(new_pos - old_pos) <= window


def test_shuffle_window_zero_is_identity():
    rng = np.random.default_rng(0)
    assert local_shuffle(TOKENS, 0, rng) == TOKENS


def test_dropout_keeps_order():
    rng = np.random.default_rng(1)
    out = word_dropout(TOKENS, 0.5, rng)
    positions = [TOKENS.index(t) for t in out]
    assert positions == sorted(positions)


def test_dropout_p_zero_and_one():
    rng = np.random.default_rng(2)
    assert word_dropout(TOKENS, 0.0, rng) == TOKENS
    assert word_dropout(TOKENS, 1.0, rng) == []
    with pytest.raises(ValueError):
        word_dropout(TOKENS, 1.2, rng)


def test_dropout_survivor_mean_within_3_sigma():
    # 10k independent trials, each dropping 20 tokens with p=0.15:
    # survivors ~ Binomial(20, 0.85), mean 17, sd sqrt(20*.85*.15)
    trials = 10_000
    p = 0.15
    rng = substream(123, "dropout-stats")
    total = sum(len(word_dropout(TOKENS, p, rng)) for _ in range(trials))
    mean = total / trials
    sigma_mean = math.sqrt(20 * p * (1 - p)) / math.sqrt(trials)
    assert abs(mean - 17.0) <= 3 * sigma_mean


def test_mask_rate_within_3_sigma():
    trials = 5_000
    cfg = NoiseConfig(mask_prob=0.3, drop_prob=0.0, shuffle_window=0)
    rng = substream(77, "mask-stats")
    masked = 0
    for _ in range(trials):
        out = noise_tokens(TOKENS, cfg, rng)
        assert len(out) == len(TOKENS)
        masked += sum(t == cfg.mask_token for t in out)
    rate = masked / (trials * len(TOKENS))
    sigma = math.sqrt(0.3 * 0.7 / (trials * len(TOKENS)))
    assert abs(rate - 0.3) <= 3 * sigma


def test_noise_tokens_deterministic_from_config_seed():
    cfg = NoiseConfig(seed=9)
    assert noise_tokens(TOKENS, cfg) == noise_tokens(TOKENS, cfg)


def test_noise_tokens_empty_input():
    assert noise_tokens([], NoiseConfig()) == []


def test_noise_applies_shuffle_before_drop_before_mask():
    # with window=0 and drop=0, only masking can change tokens
    cfg = NoiseConfig(mask_prob=1.0, drop_prob=0.0, shuffle_window=0)
    out = noise_tokens(TOKENS, cfg, np.random.default_rng(0))
    assert out == [cfg.mask_token] * len(TOKENS)
    # with mask=0 and drop=1 everything disappears regardless of shuffling
    cfg = NoiseConfig(mask_prob=0.0, drop_prob=1.0, shuffle_window=3)
    assert noise_tokens(TOKENS, cfg, np.random.default_rng(0)) == []
