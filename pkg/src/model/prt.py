"""
Pair-wise relational transformer layer

Relational attention adds a projected pair edge to every query, key and
value, so queries are pair-specific:

    q_ij = n_i W_nQ + e_ij W_eQ,  k_ij = n_j W_nK + e_ij W_eK,  v_ij = n_j W_nV + e_ij W_eV

Nodes are updated first; edges are then updated from messages built on the
post-update nodes.
"""
from ..core import ops
from .layers import (attention_scale, declare_residual_update, linear, pair_broadcast,
                     residual_update)


def declare_prt_layer(store, prefix, cfg):
    for name in ("q", "k", "v"):
        store.add_linear(f"{prefix}.node_{name}", cfg.d_n, cfg.d_n)
        store.add_linear(f"{prefix}.edge_{name}", cfg.d_e, cfg.d_n)
    declare_residual_update(store, f"{prefix}.node_update", cfg.d_n, cfg.d_n, cfg.d_h)
    store.add_linear(f"{prefix}.message", 2 * cfg.d_e + 2 * cfg.d_n, cfg.d_h)
    declare_residual_update(store, f"{prefix}.edge_update", cfg.d_h, cfg.d_e, cfg.d_h)


def relational_qkv(nodes, edges, params, prefix):
    """
    Pair-specific queries, keys and values

    Returns:
        q, k, v: (N, N, d_n) Tensors indexed [destination i, source j]
    """
    n = nodes.shape[0]
    q = pair_broadcast(linear(nodes, params, f"{prefix}.node_q"), n, "dest")
    k = pair_broadcast(linear(nodes, params, f"{prefix}.node_k"), n, "source")
    v = pair_broadcast(linear(nodes, params, f"{prefix}.node_v"), n, "source")
    q = q + linear(edges, params, f"{prefix}.edge_q")
    k = k + linear(edges, params, f"{prefix}.edge_k")
    v = v + linear(edges, params, f"{prefix}.edge_v")
    return q, k, v


def relational_attention(q, k, v, heads, scale):
    """
    Multi-head attention over pair-specific q/k/v

    Returns:
        context: (N, d_n) Tensor
        weights: (N, N, heads) attention, softmax taken over the source axis
    """
    n, _, d_n = q.shape
    head_dim = d_n // heads
    split = (n, n, heads, head_dim)
    logits = ops.sum(ops.reshape(q, split) * ops.reshape(k, split), axis=-1) / scale
    weights = ops.softmax(logits, axis=1)
    context = ops.sum(ops.reshape(weights, (n, n, heads, 1)) * ops.reshape(v, split), axis=1)
    return ops.reshape(context, (n, d_n)), weights


def prt_node_update(nodes, edges, params, prefix, heads, scale_mode="head"):
    """
    Relational attention followed by [Add & Norm] - [FeedForward] - [Add & Norm]

    Returns:
        updated nodes (N, d_n) and attention weights (heads, N, N)
    """
    q, k, v = relational_qkv(nodes, edges, params, prefix)
    scale = attention_scale(nodes.shape[-1], heads, scale_mode)
    context, weights = relational_attention(q, k, v, heads, scale)
    updated = residual_update(context, nodes, params, f"{prefix}.node_update")
    return updated, ops.transpose(weights, (2, 0, 1))


def pair_message(updated_nodes, edges, params, prefix):
    """m_ij = ReLU([e_ij; e_ji; n_i; n_j] W_m) on post-update nodes"""
    n = updated_nodes.shape[0]
    reverse = ops.transpose(edges, (1, 0, 2))
    stacked = ops.concat([edges, reverse,
                          pair_broadcast(updated_nodes, n, "dest"),
                          pair_broadcast(updated_nodes, n, "source")], axis=-1)
    return ops.relu(linear(stacked, params, f"{prefix}.message"))


def prt_edge_update(edges, messages, params, prefix):
    """[Add & Norm] over m_ij W_2 + e_ij, FeedForward, [Add & Norm]"""
    return residual_update(messages, edges, params, f"{prefix}.edge_update")


def prt_layer(nodes, edges, params, prefix, heads, scale_mode="head"):
    """One full PRT layer: node update, then edge update from the new nodes"""
    updated, weights = prt_node_update(nodes, edges, params, prefix, heads, scale_mode)
    messages = pair_message(updated, edges, params, prefix)
    return updated, prt_edge_update(edges, messages, params, prefix), weights
