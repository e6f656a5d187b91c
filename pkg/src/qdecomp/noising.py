"""Token-level noising: local shuffle, dropout, and masking.

Applied in the order shuffle, drop, mask. The shuffle sorts positions by
i + u_i with u_i uniform in [0, k] (stable sort), which bounds every token's
displacement by k.
"""

from dataclasses import dataclass

import numpy as np


@dataclass(frozen=True)
class NoiseConfig:
    mask_prob: float = 0.15
    drop_prob: float = 0.1
    shuffle_window: int = 3
    mask_token: str = "<mask>"
    seed: int = 0

    def __post_init__(self):
        for name in ("mask_prob", "drop_prob"):
            p = getattr(self, name)
            if not 0.0 <= p <= 1.0:
                raise ValueError(f"{name} must be in [0, 1], got {p}")
        if self.shuffle_window < 0:
            raise ValueError("shuffle_window must be non-negative")
        if not self.mask_token:
            raise ValueError("mask_token must be non-empty")


def local_shuffle(tokens, window, rng):
    """Permute tokens with displacement at most ``window``."""
    if window < 0:
        raise ValueError("window must be non-negative")
    out = list(tokens)
    if window == 0 or len(out) < 2:
        return out
    keys = np.arange(len(out), dtype=np.float64) + rng.uniform(0.0, window, len(out))
    order = np.argsort(keys, kind="stable")
    return [out[i] for i in order]


def word_dropout(tokens, p, rng):
    """Drop each token independently with probability p; order preserved."""
    if not 0.0 <= p <= 1.0:
        raise ValueError(f"dropout probability must be in [0, 1], got {p}")
    out = list(tokens)
    if p == 0.0 or not out:
        return out
    keep = rng.random(len(out)) >= p
    return [t for t, k in zip(out, keep) if k]


def noise_tokens(tokens, config, rng=None):
    """Noised copy of a token list: shuffle, then drop, then mask.

    Deterministic for a given config and rng state; with rng omitted a fresh
    generator is seeded from config.seed.
    """
    if rng is None:
        rng = np.random.default_rng(config.seed)
    out = local_shuffle(tokens, config.shuffle_window, rng)
    out = word_dropout(out, config.drop_prob, rng)
    if config.mask_prob > 0.0 and out:
        masked = rng.random(len(out)) < config.mask_prob
        out = [config.mask_token if m else t for t, m in zip(out, masked)]
    return out
