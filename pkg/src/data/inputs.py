"""
Conversion between absolute trajectories and model inputs
"""
import numpy as np

from ..utils.errors import ConfigError


def to_relative(positions):
    """
    Per-step displacements with a leading zero row

    Args:
        positions: (..., T, 2) absolute positions

    Returns:
        (..., T, 2) array, rel[..., 0, :] = 0 and rel[..., t, :] = pos[t] - pos[t-1]
    """
    positions = np.asarray(positions, dtype=np.float64)
    rel = np.zeros_like(positions)
    rel[..., 1:, :] = np.diff(positions, axis=-2)
    return rel


def from_relative(rel, origin):
    """Inverse of to_relative: origin + cumulative sum of the displacements"""
    rel = np.asarray(rel, dtype=np.float64)
    origin = np.asarray(origin, dtype=np.float64)
    return np.expand_dims(origin, -2) + np.cumsum(rel, axis=-2)


def model_inputs(obs, d_in):
    """
    Model input for observed absolute positions

    d_in=2: relative displacements (pedestrian scenes)
    d_in=4: absolute and relative positions side by side (sports scenes)

    Returns:
        (N, T_p, d_in) float64 array
    """
    obs = np.asarray(obs, dtype=np.float64)
    if d_in == 2:
        return to_relative(obs)
    if d_in == 4:
        return np.concatenate([obs, to_relative(obs)], axis=-1)
    raise ConfigError(f"d_in must be 2 or 4, got {d_in}")


def constant_velocity(obs, t_f):
    """
    Extrapolate each agent's last observed displacement

    Args:
        obs: (N, T_p, 2) absolute positions
        t_f: number of future steps

    Returns:
        (N, t_f, 2) predicted positions
    """
    obs = np.asarray(obs, dtype=np.float64)
    velocity = obs[:, -1] - obs[:, -2]
    steps = np.arange(1, t_f + 1, dtype=np.float64)[None, :, None]
    return obs[:, -1:, :] + steps * velocity[:, None, :]
