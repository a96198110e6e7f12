"""
Multiscale relational transformer encoder

Both branches start from the same initial node features. The PRT branch
evolves (nodes, pair edges) through L layers; the HRT branch evolves
(nodes, hyperedges) through L layers under one incidence matrix estimated
once from the initial node features.

``cfg.encoder`` selects the ablations: ``pair_only`` and ``group_only``
run a single branch, ``vanilla`` replaces both with plain transformer
layers. A disabled branch contributes zeros to the decoder input and
declares no parameters.
"""
from dataclasses import dataclass, field

import numpy as np

from ..core.autodiff import as_tensor
from ..core.scene import FeatureSet
from ..data.inputs import model_inputs
from .age import (GroupIncidence, center_nodes, declare_age_params, estimate_groups,
                  threshold_value)
from .features import declare_feature_params, init_hyperedges, init_node_features, init_pair_edges
from .hrt import declare_hrt_layer, hrt_layer
from .prt import declare_prt_layer, prt_layer
from .transformer import declare_transformer_layer, transformer_layer

PAIR_ENCODERS = ("marte", "pair_only")
GROUP_ENCODERS = ("marte", "group_only")


@dataclass
class EncoderOutput:
    """Node features at both scales plus what produced them"""
    n_pair: object                  # Tensor (N, d_n); vanilla output for the vanilla encoder
    n_group: object                 # Tensor (N, d_n)
    group_incidence: GroupIncidence
    n0: object                      # Tensor (N, d_n)
    features: FeatureSet = None
    pair_attention: list = field(default_factory=list)    # per layer (heads, N, N)
    group_attention: list = field(default_factory=list)   # per layer (heads, N, N)


def declare_encoder_params(store, cfg):
    declare_feature_params(store, cfg)
    if cfg.encoder in GROUP_ENCODERS:
        declare_age_params(store, cfg)
    for layer in range(cfg.layers):
        if cfg.encoder in PAIR_ENCODERS:
            declare_prt_layer(store, f"prt.{layer}", cfg)
        elif cfg.encoder == "vanilla":
            declare_transformer_layer(store, f"vanilla.{layer}", cfg)
    if cfg.encoder in GROUP_ENCODERS:
        for layer in range(cfg.layers):
            declare_hrt_layer(store, f"hrt.{layer}", cfg)


def group_affinity_nodes(n0, cfg):
    """Node features the group estimator compares"""
    return center_nodes(n0) if cfg.group_affinity == "centered" else n0


def encode(scene, params, cfg, fixed_groups=None, detach_groups=False):
    """
    Encode one scene

    Args:
        scene: Scene (absolute observations) or an (N, T_p, d_in) model input array
        params: ParameterStore consistent with cfg
        cfg: TrainConfig
        fixed_groups: optional (N, N) 0/1 array used instead of the estimate
            (a constant: no adjoint reaches the estimator)
        detach_groups: estimate G but stop its adjoint

    Returns:
        EncoderOutput (``group_incidence`` is None without a group branch)
    """
    x = model_inputs(scene.obs, cfg.d_in) if hasattr(scene, "obs") else np.asarray(scene)
    n0 = init_node_features(x, params)
    zeros = as_tensor(np.zeros(n0.shape), dtype=n0.dtype)
    use_pairs = cfg.encoder in PAIR_ENCODERS
    use_groups = cfg.encoder in GROUP_ENCODERS

    groups = None
    if use_groups and fixed_groups is not None:
        groups = GroupIncidence(tensor=as_tensor(np.asarray(fixed_groups), dtype=n0.dtype))
    elif use_groups:
        groups = estimate_groups(group_affinity_nodes(n0, cfg), threshold_value(params),
                                 cfg.ste_variant, detach=detach_groups)

    edges = init_pair_edges(n0, params) if use_pairs else None
    hyperedges = init_hyperedges(n0, groups, params) if use_groups else None
    output = EncoderOutput(n_pair=zeros, n_group=zeros, group_incidence=groups, n0=n0,
                           features=FeatureSet(nodes=n0, pair_edges=edges, hyperedges=hyperedges))

    if use_pairs:
        nodes = n0
        for layer in range(cfg.layers):
            nodes, edges, weights = prt_layer(nodes, edges, params, f"prt.{layer}",
                                              cfg.heads, cfg.attention_scale)
            output.pair_attention.append(weights)
        output.n_pair = nodes
    elif cfg.encoder == "vanilla":
        nodes = n0
        for layer in range(cfg.layers):
            nodes, weights = transformer_layer(nodes, params, f"vanilla.{layer}",
                                               cfg.heads, cfg.attention_scale)
            output.pair_attention.append(weights)
        output.n_pair = nodes

    if use_groups:
        nodes = n0
        for layer in range(cfg.layers):
            nodes, hyperedges, weights = hrt_layer(nodes, hyperedges, groups.tensor, params,
                                                   f"hrt.{layer}", cfg.heads, cfg.attention_scale)
            output.group_attention.append(weights)
        output.n_group = nodes
    return output
