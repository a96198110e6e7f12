"""
Scene batches

Scenes have different agent counts, so a batch is a plain list of scenes
and nothing is padded.
"""
import numpy as np

from ..utils.errors import ConfigError


def shuffled_batches(scenes, batch_size, rng):
    """Split a seeded permutation of ``scenes`` into consecutive batches; the last may be short"""
    if batch_size < 1:
        raise ConfigError(f"batch_size must be positive, got {batch_size}")
    order = rng.permutation(len(scenes))
    return [[scenes[i] for i in order[start:start + batch_size]]
            for start in range(0, len(order), batch_size)]


def epoch_batches(scenes, batch_size, seed, epoch):
    """Batches of one epoch; the order depends only on (seed, epoch)"""
    return shuffled_batches(scenes, batch_size, np.random.default_rng([seed, epoch]))


def split_scenes(scenes, fraction, seed=0):
    """Deterministic (train, held_out) split with ``fraction`` of scenes held out"""
    if not 0.0 <= fraction < 1.0:
        raise ConfigError(f"held-out fraction must lie in [0, 1), got {fraction}")
    order = np.random.default_rng(seed).permutation(len(scenes))
    cut = len(scenes) - int(round(fraction * len(scenes)))
    return [scenes[i] for i in order[:cut]], [scenes[i] for i in order[cut:]]
