"""
Hyper relational transformer layer

Queries, keys and values are token-wise: each agent adds the mean of the
hyperedges it belongs to as group-aware positional information. Softmax
runs over all agents; the incidence enters only through those means.
"""
from ..core import ops
from .layers import (attention_scale, declare_residual_update, hyperedge_mean, linear,
                     membership_mean, residual_update)


def declare_hrt_layer(store, prefix, cfg):
    for name in ("q", "k", "v"):
        store.add_linear(f"{prefix}.node_{name}", cfg.d_n, cfg.d_n)
        store.add_linear(f"{prefix}.hyper_{name}", cfg.d_e, cfg.d_n)
    declare_residual_update(store, f"{prefix}.node_update", cfg.d_n, cfg.d_n, cfg.d_h)
    store.add_linear(f"{prefix}.message", cfg.d_e + cfg.d_n, cfg.d_h)
    declare_residual_update(store, f"{prefix}.hyperedge_update", cfg.d_h, cfg.d_e, cfg.d_h)


def hyper_qkv(nodes, hyperedges, G, params, prefix):
    """
    q_i = n_i W_nQ + agg_i W_hQ with agg_i the mean of {h_k : G_ik = 1}; k, v alike

    Returns:
        q, k, v: (N, d_n) Tensors
    """
    agg = membership_mean(G, hyperedges)
    return tuple(linear(nodes, params, f"{prefix}.node_{name}")
                 + linear(agg, params, f"{prefix}.hyper_{name}")
                 for name in ("q", "k", "v"))


def token_attention(q, k, v, heads, scale):
    """
    Standard multi-head scaled dot-product attention over N tokens

    Returns:
        context (N, d_n) and weights (heads, N, N)
    """
    n, d_n = q.shape
    head_dim = d_n // heads

    def split(x):
        return ops.transpose(ops.reshape(x, (n, heads, head_dim)), (1, 0, 2))

    qh, kh, vh = split(q), split(k), split(v)
    logits = ops.matmul(qh, ops.swapaxes(kh, -1, -2)) / scale
    weights = ops.softmax(logits, axis=-1)
    context = ops.transpose(ops.matmul(weights, vh), (1, 0, 2))
    return ops.reshape(context, (n, d_n)), weights


def hrt_node_update(nodes, hyperedges, G, params, prefix, heads, scale_mode="head"):
    q, k, v = hyper_qkv(nodes, hyperedges, G, params, prefix)
    scale = attention_scale(nodes.shape[-1], heads, scale_mode)
    context, weights = token_attention(q, k, v, heads, scale)
    return residual_update(context, nodes, params, f"{prefix}.node_update"), weights


def hyper_message(hyperedges, updated_nodes, G, params, prefix):
    """m_i = ReLU([h_i; mean of {n_j : G_ji = 1}] W_m)"""
    members = hyperedge_mean(G, updated_nodes)
    return ops.relu(linear(ops.concat([hyperedges, members], axis=-1), params, f"{prefix}.message"))


def hrt_hyperedge_update(hyperedges, messages, params, prefix):
    return residual_update(messages, hyperedges, params, f"{prefix}.hyperedge_update")


def hrt_layer(nodes, hyperedges, G, params, prefix, heads, scale_mode="head"):
    updated, weights = hrt_node_update(nodes, hyperedges, G, params, prefix, heads, scale_mode)
    messages = hyper_message(hyperedges, updated, G, params, prefix)
    return updated, hrt_hyperedge_update(hyperedges, messages, params, prefix), weights
