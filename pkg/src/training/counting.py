"""
Parameter and multiply-accumulate counts

MAC convention: one MAC per scalar multiply-accumulate in every matrix
product of the forward pass, i.e. linear layers, incidence aggregations,
the affinity Gram matrix and attention score/context products. Bias adds,
normalization, activations and softmax are not counted.
"""
from collections import OrderedDict

import numpy as np

from ..model.mart import shape_manifest
from ..model.marte import GROUP_ENCODERS, PAIR_ENCODERS
from ..utils.errors import ConfigError


def count_params(cfg):
    """Exact number of learnable scalars of the configured model"""
    return int(sum(int(np.prod(shape)) for _, shape in shape_manifest(cfg)))


def param_breakdown(cfg):
    """Parameter totals per top-level group (node_init, prt, decoder, ...)"""
    totals = OrderedDict()
    for name, shape in shape_manifest(cfg):
        group = name.split(".", 1)[0]
        totals[group] = totals.get(group, 0) + int(np.prod(shape))
    return totals


def _mlp_macs(rows, dims):
    return rows * sum(a * b for a, b in zip(dims[:-1], dims[1:]))


def _residual_update_macs(rows, in_dim, dim, hidden):
    return rows * in_dim * dim + _mlp_macs(rows, [dim, hidden, dim])


def mac_breakdown(cfg, n_agents):
    """
    MACs of one forward pass over a scene of ``n_agents`` agents, per stage

    Stages of a disabled encoder branch are left out; the decoder still
    multiplies the zero block of its input.

    Returns:
        OrderedDict stage -> MAC count
    """
    if n_agents < 1:
        raise ConfigError(f"n_agents must be positive, got {n_agents}")
    n, pairs = n_agents, n_agents * n_agents
    d_n, d_e, d_h = cfg.d_n, cfg.d_e, cfg.d_h

    pair_branch = cfg.encoder in PAIR_ENCODERS
    group_branch = cfg.encoder in GROUP_ENCODERS

    stages = OrderedDict()
    stages["node_init"] = n * cfg.t_p * cfg.d_in * d_n + n * cfg.t_p * d_n * d_n
    if group_branch:
        stages["age"] = pairs * d_n
    if pair_branch:
        stages["pair_init"] = _mlp_macs(pairs, [2 * d_n, d_h, d_e])
    if group_branch:
        stages["hyper_init"] = pairs * d_n + _mlp_macs(n, [d_n, d_h, d_e])

    prt = (3 * n * d_n * d_n                         # node q/k/v
           + 3 * pairs * d_e * d_n                   # edge q/k/v
           + 2 * pairs * d_n                         # scores and context
           + _residual_update_macs(n, d_n, d_n, d_h)
           + pairs * (2 * d_e + 2 * d_n) * d_h       # messages
           + _residual_update_macs(pairs, d_h, d_e, d_h))
    hrt = (pairs * d_e                               # membership mean
           + 3 * n * d_n * d_n + 3 * n * d_e * d_n
           + 2 * pairs * d_n
           + _residual_update_macs(n, d_n, d_n, d_h)
           + pairs * d_n                             # member mean
           + n * (d_e + d_n) * d_h
           + _residual_update_macs(n, d_h, d_e, d_h))
    vanilla = (3 * n * d_n * d_n
               + 2 * pairs * d_n
               + _residual_update_macs(n, d_n, d_n, d_h))
    if pair_branch:
        stages["prt"] = cfg.layers * prt
    if cfg.encoder == "vanilla":
        stages["vanilla"] = cfg.layers * vanilla
    if group_branch:
        stages["hrt"] = cfg.layers * hrt
    stages["decoder"] = cfg.k * _mlp_macs(n, [3 * d_n, cfg.d_d, cfg.d_d // 2, cfg.t_f * 2])
    return stages


def count_macs(cfg, n_agents):
    return int(sum(mac_breakdown(cfg, n_agents).values()))
