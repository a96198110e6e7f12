"""
Synthetic scenes with planted, possibly overlapping, groups
"""
import logging
from dataclasses import asdict, dataclass

import numpy as np

from ..core.scene import Scene
from ..utils.errors import ConfigError
from ..utils.log import log_fields

logger = logging.getLogger(__name__)


@dataclass
class SynthConfig:
    """
    Generator settings

    Each group moves with a shared velocity that turns at a group-specific
    rate. An agent's velocity blends its group velocity (weight
    group_coherence) with a private constant velocity; positions get
    i.i.d. Gaussian noise of std noise_std meters per step.
    """
    num_scenes: int = 500
    agents_per_scene: int = 8
    groups_per_scene: int = 2
    t_p: int = 10
    t_f: int = 20
    group_coherence: float = 0.9
    noise_std: float = 0.05
    seed: int = 0
    overlap_prob: float = 0.0       # chance an agent also joins a second group
    speed: float = 0.4              # mean speed, meters per step
    turn_rate_std: float = 0.05     # radians per step
    spread: float = 1.0             # std of member offsets around the group center, meters

    def validate(self):
        if self.num_scenes < 0:
            raise ConfigError(f"num_scenes must be non-negative, got {self.num_scenes}")
        if self.agents_per_scene < 1 or self.groups_per_scene < 1:
            raise ConfigError("agents_per_scene and groups_per_scene must be positive")
        if self.groups_per_scene > self.agents_per_scene:
            raise ConfigError(
                f"groups_per_scene={self.groups_per_scene} exceeds agents_per_scene={self.agents_per_scene}")
        if self.t_p < 2 or self.t_f < 1:
            raise ConfigError(f"need t_p >= 2 and t_f >= 1, got {self.t_p}/{self.t_f}")
        if not 0.0 <= self.group_coherence <= 1.0:
            raise ConfigError(f"group_coherence must lie in [0, 1], got {self.group_coherence}")
        if not 0.0 <= self.overlap_prob <= 1.0:
            raise ConfigError(f"overlap_prob must lie in [0, 1], got {self.overlap_prob}")
        if self.noise_std < 0 or self.speed < 0 or self.turn_rate_std < 0 or self.spread < 0:
            raise ConfigError("noise_std, speed, turn_rate_std and spread must be non-negative")
        return self

    @classmethod
    def from_dict(cls, values):
        known = {key: values[key] for key in asdict(cls()) if key in values}
        unknown = sorted(set(values) - set(known))
        if unknown:
            raise ConfigError(f"Unknown synthetic data keys: {unknown}")
        types = {key: type(value) for key, value in asdict(cls()).items()}
        try:
            return cls(**{key: types[key](value) for key, value in known.items()}).validate()
        except (TypeError, ValueError) as exc:
            raise ConfigError(f"Invalid synthetic data value: {exc}") from None


def _heading_velocity(rng, speed):
    angle = rng.uniform(0.0, 2.0 * np.pi)
    magnitude = speed * rng.uniform(0.5, 1.5)
    return magnitude * np.array([np.cos(angle), np.sin(angle)])


def _assign_groups(rng, cfg):
    """Membership lists per agent; every group gets at least one agent"""
    order = rng.permutation(cfg.agents_per_scene)
    memberships = [[] for _ in range(cfg.agents_per_scene)]
    for slot, agent in enumerate(order):
        group = slot if slot < cfg.groups_per_scene else int(rng.integers(cfg.groups_per_scene))
        memberships[agent].append(group)
    if cfg.groups_per_scene > 1:
        for agent in range(cfg.agents_per_scene):
            if rng.random() < cfg.overlap_prob:
                others = [g for g in range(cfg.groups_per_scene) if g not in memberships[agent]]
                memberships[agent].append(int(rng.choice(others)))
    return memberships


def _rotation(angle):
    c, s = np.cos(angle), np.sin(angle)
    return np.array([[c, -s], [s, c]])


def generate_scene(rng, cfg, scene_id):
    n, steps = cfg.agents_per_scene, cfg.t_p + cfg.t_f
    memberships = _assign_groups(rng, cfg)

    centers = rng.uniform(-5.0, 5.0, size=(cfg.groups_per_scene, 2))
    group_velocity = np.stack([_heading_velocity(rng, cfg.speed) for _ in range(cfg.groups_per_scene)])
    turn_rate = rng.normal(0.0, cfg.turn_rate_std, size=cfg.groups_per_scene)
    private = np.stack([_heading_velocity(rng, cfg.speed) for _ in range(n)])
    offsets = rng.normal(0.0, cfg.spread, size=(n, 2))

    # group velocity at every step: (steps, G, 2)
    velocity_track = np.stack([
        np.stack([_rotation(turn_rate[g] * t) @ group_velocity[g] for g in range(cfg.groups_per_scene)])
        for t in range(steps)
    ])

    positions = np.zeros((n, steps, 2))
    for agent, groups in enumerate(memberships):
        shared = velocity_track[:, groups, :].mean(axis=1)          # (steps, 2)
        velocity = cfg.group_coherence * shared + (1.0 - cfg.group_coherence) * private[agent]
        start = centers[groups].mean(axis=0) + offsets[agent]
        positions[agent] = start + np.cumsum(velocity, axis=0)
    if cfg.noise_std > 0:
        positions = positions + rng.normal(0.0, cfg.noise_std, size=positions.shape)

    truth = np.zeros((n, n), dtype=np.int64)
    for i in range(n):
        for j in range(n):
            truth[i, j] = int(i == j or bool(set(memberships[i]) & set(memberships[j])))

    return Scene(scene_id=scene_id, obs=positions[:, :cfg.t_p], fut=positions[:, cfg.t_p:],
                 group_truth=truth)


def generate_synthetic(cfg, progress=False):
    """
    Generate cfg.num_scenes scenes from one seeded stream

    Args:
        cfg: SynthConfig
        progress: show a tqdm progress bar

    Returns:
        List of labeled Scenes with group_truth
    """
    cfg.validate()
    rng = np.random.default_rng(cfg.seed)
    iterator = range(cfg.num_scenes)
    if progress:
        try:
            from tqdm import tqdm
            iterator = tqdm(iterator, desc="Generating scenes")
        except ImportError:
            pass
    scenes = [generate_scene(rng, cfg, f"synth-{cfg.seed}-{index:05d}") for index in iterator]
    log_fields(logger, "generated synthetic scenes", scenes=len(scenes), agents=cfg.agents_per_scene,
               groups=cfg.groups_per_scene, coherence=cfg.group_coherence,
               noise_std=cfg.noise_std, seed=cfg.seed)
    return scenes
