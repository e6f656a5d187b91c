"""Deterministic named RNG substreams derived from one global seed."""

import zlib

import numpy as np


def child_seed_sequence(seed, stage, *indices):
    """SeedSequence for a named stage (and optional record indices)."""
    if seed < 0:
        raise ValueError("seed must be a non-negative integer")
    entropy = [int(seed), zlib.crc32(stage.encode("utf-8"))]
    entropy.extend(int(i) for i in indices)
    return np.random.SeedSequence(entropy)


def substream(seed, stage, *indices):
    """Generator for a named stage; disjoint across stages and indices."""
    return np.random.default_rng(child_seed_sequence(seed, stage, *indices))


def child_seed(seed, stage, *indices):
    """Plain integer seed derived from a named substream (for seed-taking APIs)."""
    state = child_seed_sequence(seed, stage, *indices).generate_state(2)
    return int(state[0]) + (int(state[1]) << 32)
