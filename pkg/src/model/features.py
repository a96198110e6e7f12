"""
Initial node, pair-wise edge and hyperedge features
"""
import numpy as np

from ..core import ops
from ..core.autodiff import as_tensor
from ..utils.errors import ConfigError, DimensionError
from .layers import declare_mlp, hyperedge_mean, linear, mlp, pair_broadcast


def positional_encoding(t_p, d_n, dtype=np.float64):
    """
    Sinusoidal encoding along the time axis

    PE[t, 2i] = sin(t / 10000^(2i/d_n)),  PE[t, 2i+1] = cos(t / 10000^(2i/d_n))

    Args:
        t_p: number of observed steps (t runs from 0)
        d_n: feature width, must be even

    Returns:
        (t_p, d_n) array
    """
    if d_n % 2 != 0:
        raise ConfigError(f"positional encoding needs an even width, got d_n={d_n}")
    position = np.arange(t_p, dtype=np.float64)[:, None]
    rates = 1.0 / np.power(10000.0, np.arange(0, d_n, 2, dtype=np.float64) / d_n)
    pe = np.zeros((t_p, d_n), dtype=np.float64)
    pe[:, 0::2] = np.sin(position * rates)
    pe[:, 1::2] = np.cos(position * rates)
    return pe.astype(dtype)


def declare_feature_params(store, cfg):
    store.add_linear("node_init.embed", cfg.d_in, cfg.d_n)
    store.add_linear("node_init.flatten", cfg.t_p * cfg.d_n, cfg.d_n)
    declare_mlp(store, "pair_init", [2 * cfg.d_n, cfg.d_h, cfg.d_e])
    declare_mlp(store, "hyper_init", [cfg.d_n, cfg.d_h, cfg.d_e])


def init_node_features(obs, params):
    """
    n_i = Flatten(PosEnc(X_i W_NI1)) W_NI2

    Two linear layers with the positional encoding added in between and
    no activation.

    Args:
        obs: (T_p, d_in) for one agent or (N, T_p, d_in) for a scene
        params: ParameterStore

    Returns:
        (d_n,) or (N, d_n) Tensor
    """
    obs = as_tensor(obs, dtype=params["node_init.embed.weight"].dtype)
    t_p = obs.shape[-2]
    d_n = params["node_init.embed.weight"].shape[1]
    rows = params["node_init.flatten.weight"].shape[0]
    if t_p * d_n != rows:
        raise DimensionError(
            f"observation length T_p={t_p} does not match the node initializer ({rows // d_n} steps)")
    embedded = linear(obs, params, "node_init.embed")
    embedded = embedded + positional_encoding(t_p, d_n, dtype=embedded.dtype)
    flat = ops.reshape(embedded, obs.shape[:-2] + (t_p * d_n,))
    if flat.ndim == 1:
        flat = ops.reshape(flat, (1, t_p * d_n))
        return ops.reshape(linear(flat, params, "node_init.flatten"), (d_n,))
    return linear(flat, params, "node_init.flatten")


def init_pair_edges(nodes, params):
    """
    e_ij = MLP([n_i; n_j]) for every ordered pair, self-loops included

    Returns:
        (N, N, d_e) Tensor; axis 0 is the destination i, axis 1 the source j
    """
    n = nodes.shape[0]
    pairs = ops.concat([pair_broadcast(nodes, n, "dest"), pair_broadcast(nodes, n, "source")], axis=-1)
    return mlp(pairs, params, "pair_init", depth=2)


def init_hyperedges(nodes, groups, params):
    """
    h_j = MLP(mean of n_i over the members of hyperedge j)

    Args:
        nodes: (N, d_n) initial node features
        groups: GroupIncidence or (N, N) incidence Tensor/array

    Raises:
        InvariantViolation: if a hyperedge has no member
    """
    G = getattr(groups, "tensor", groups)
    return mlp(hyperedge_mean(G, nodes), params, "hyper_init", depth=2)
