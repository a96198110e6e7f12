"""
Plain transformer encoder layer over agent tokens (no edges, no groups)

Used by the ``vanilla`` encoder ablation. Parameter names follow the PRT/HRT
node side, so the same weights collapse either relational layer onto this one.
"""
from .hrt import token_attention
from .layers import attention_scale, declare_residual_update, linear, residual_update


def declare_transformer_layer(store, prefix, cfg):
    for name in ("q", "k", "v"):
        store.add_linear(f"{prefix}.node_{name}", cfg.d_n, cfg.d_n)
    declare_residual_update(store, f"{prefix}.node_update", cfg.d_n, cfg.d_n, cfg.d_h)


def transformer_layer(nodes, params, prefix, heads, scale_mode="head"):
    """
    Multi-head self-attention, [Add & Norm], FeedForward, [Add & Norm]

    Returns:
        updated nodes (N, d_n) and attention weights (heads, N, N)
    """
    q, k, v = (linear(nodes, params, f"{prefix}.node_{name}") for name in ("q", "k", "v"))
    scale = attention_scale(nodes.shape[-1], heads, scale_mode)
    context, weights = token_attention(q, k, v, heads, scale)
    return residual_update(context, nodes, params, f"{prefix}.node_update"), weights
