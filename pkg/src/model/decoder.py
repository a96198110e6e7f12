"""
Multi-head trajectory decoder
"""
from dataclasses import dataclass

import numpy as np

from ..core import ops
from .layers import declare_mlp, mlp


@dataclass
class PredictionSet:
    """K candidate futures per agent, shape (K, N, T_f, 2), meters"""
    preds: object

    @property
    def k(self):
        return self.preds.shape[0]

    def numpy(self):
        return np.asarray(getattr(self.preds, "data", self.preds))


def declare_decoder_params(store, cfg):
    dims = [3 * cfg.d_n, cfg.d_d, cfg.d_d // 2, cfg.t_f * 2]
    for head in range(cfg.k):
        declare_mlp(store, f"decoder.{head}", dims)


def decode(enc, n0, params, k, t_f):
    """
    Y_k = F_D,k([N0; N_pair; N_group]) for every head k

    Each head is a three-layer MLP (3 d_n -> d_D -> d_D/2 -> T_f*2, ReLU in
    between) with its own parameters.

    Returns:
        PredictionSet holding a (K, N, T_f, 2) Tensor
    """
    features = ops.concat([n0, enc.n_pair, enc.n_group], axis=-1)
    n = features.shape[0]
    heads = [ops.reshape(mlp(features, params, f"decoder.{head}", depth=3), (n, t_f, 2))
             for head in range(k)]
    return PredictionSet(preds=ops.stack(heads, axis=0))
