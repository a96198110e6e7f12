"""
Building blocks shared by the initializers, PRT, HRT and the decoder
"""
import numpy as np

from ..core import ops
from ..core.autodiff import as_tensor
from ..utils.errors import InvariantViolation


def linear(x, params, prefix):
    """x @ W + b for ``prefix.weight`` / ``prefix.bias``"""
    return ops.matmul(x, params[f"{prefix}.weight"]) + params[f"{prefix}.bias"]


def declare_mlp(store, prefix, dims):
    """Declare linear layers ``prefix.0``, ``prefix.1``, ... for dims[0] -> ... -> dims[-1]"""
    for i, (fan_in, fan_out) in enumerate(zip(dims[:-1], dims[1:])):
        store.add_linear(f"{prefix}.{i}", fan_in, fan_out)


def mlp(x, params, prefix, depth):
    """Stack of ``depth`` linear layers with ReLU between them (none after the last)"""
    for i in range(depth):
        x = linear(x, params, f"{prefix}.{i}")
        if i < depth - 1:
            x = ops.relu(x)
    return x


def layer_norm(x, params, prefix):
    return ops.layer_norm(x, params[f"{prefix}.gain"], params[f"{prefix}.bias"])


def declare_residual_update(store, prefix, in_dim, dim, hidden):
    """
    Parameters of the transformer-like update

        u = LayerNorm(update W + residual)
        z = FeedForward(u)                  # dim -> hidden -> dim, ReLU
        out = LayerNorm(z + u)
    """
    store.add_linear(f"{prefix}.proj", in_dim, dim)
    store.add_layer_norm(f"{prefix}.norm1", dim)
    declare_mlp(store, f"{prefix}.ffn", [dim, hidden, dim])
    store.add_layer_norm(f"{prefix}.norm2", dim)


def residual_update(update, residual, params, prefix):
    u = layer_norm(linear(update, params, f"{prefix}.proj") + residual, params, f"{prefix}.norm1")
    z = mlp(u, params, f"{prefix}.ffn", depth=2)
    return layer_norm(z + u, params, f"{prefix}.norm2")


def attention_scale(d_n, heads, mode):
    """Logit denominator: sqrt(d_n / heads) for 'head', sqrt(d_n) for 'model'"""
    return float(np.sqrt(d_n / heads if mode == "head" else d_n))


# group aggregation -----------------------------------------------------------

def _counts(G, axis, what):
    counts = G.sum(axis=axis)
    if np.any(counts.data <= 0):
        raise InvariantViolation(f"empty {what}: group incidence has an all-zero {'column' if axis == 0 else 'row'}")
    return counts


def hyperedge_mean(G, x):
    """
    Mean of x over each hyperedge's members

    Row j of the result averages x_i over {i : G_ij = 1}, i.e. over the
    members of ego agent j's hyperedge.
    """
    G = as_tensor(G, dtype=x.dtype)
    counts = _counts(G, 0, "hyperedge")
    n = counts.shape[0]
    return ops.matmul(G.T, x) / ops.reshape(counts, (n, 1))


def membership_mean(G, h):
    """
    Mean of hyperedge features over the hyperedges each agent belongs to

    Row i of the result averages h_k over {k : G_ik = 1}.
    """
    G = as_tensor(G, dtype=h.dtype)
    counts = _counts(G, 1, "membership")
    n = counts.shape[0]
    return ops.matmul(G, h) / ops.reshape(counts, (n, 1))


def pair_broadcast(x, n, side):
    """
    Lift per-agent rows to the N x N pair grid

    side='dest' repeats x_i along axis 1 (row i holds the destination);
    side='source' repeats x_j along axis 0.
    """
    d = x.shape[-1]
    shape = (n, 1, d) if side == "dest" else (1, n, d)
    return ops.broadcast_to(ops.reshape(x, shape), (n, n, d))
