"""
Adaptive group estimator

G_ij = U(A_ij - Theta): agent i joins ego agent j's hyperedge when the
cosine affinity of their initial node features reaches a learnable
threshold Theta = tanh(raw). The unit step is kept in the forward pass and
replaced by a surrogate derivative in the backward pass.

The encoder passes scene-centered node features by default
(``group_affinity = centered``); ``raw`` uses N^(0) as is.
"""
from dataclasses import dataclass
from enum import Enum

import numpy as np

from ..core import ops
from ..core.autodiff import CustomGradRegion, Tensor, stop_gradient
from ..utils.errors import ConfigError

NORM_FLOOR = 1e-8
STE_SUPPORT = 0.5
THRESHOLD_PARAM = "age.threshold_raw"


class SteVariant(str, Enum):
    """Surrogate derivatives of the unit step"""
    CLIPPED_PASSTHROUGH = "clipped_passthrough"
    TRIANGLE = "triangle"
    LONG_TAILED = "long_tailed"

    @classmethod
    def parse(cls, value):
        if isinstance(value, cls):
            return value
        try:
            return cls(str(value))
        except ValueError:
            choices = [v.value for v in cls]
            raise ConfigError(f"Unknown STE variant {value!r}; expected one of {choices}") from None


def cosine_affinity(nodes):
    """
    A_ij = n_i . n_j / (|n_i| |n_j|), norms floored at 1e-8

    Returns:
        (N, N) symmetric Tensor with entries in [-1, 1]
    """
    norms = ops.clamp_min(ops.norm_last(nodes, keepdims=True), NORM_FLOOR)
    unit = nodes / norms
    return ops.matmul(unit, unit.T)


def center_nodes(nodes):
    """
    Subtract the scene mean from every node feature

    A component shared by all agents (the positional encoding and the
    biases of the node initializer) cancels; scaling and agent order do not
    change the result's cosine affinities.
    """
    return nodes - ops.mean(nodes, axis=0, keepdims=True)


def unit_step(x):
    """1 where x >= 0 (ties included), else 0"""
    x = np.asarray(x)
    out = np.where(x >= 0, 1, 0)
    return int(out) if out.ndim == 0 else out


def ste_grad(x, variant=SteVariant.TRIANGLE):
    """
    Surrogate derivative of the unit step

    triangle:            2 - 4|x| on |x| <= 0.5, else 0
    clipped_passthrough: 1 on |x| <= 0.5, else 0
    long_tailed:         2 - 8|x| on |x| <= 0.2, 0.4 on 0.2 < |x| <= 0.5, else 0

    Each is the corresponding sign-function estimator evaluated at 2x, so
    the support matches the step's surrogate interval |x| <= 0.5.
    """
    variant = SteVariant.parse(variant)
    x = np.asarray(x, dtype=np.float64) if not isinstance(x, np.ndarray) else x
    ax = np.abs(x)
    inside = ax <= STE_SUPPORT
    if variant is SteVariant.TRIANGLE:
        grad = np.where(inside, 2.0 - 4.0 * ax, 0.0)
    elif variant is SteVariant.CLIPPED_PASSTHROUGH:
        grad = np.where(inside, 1.0, 0.0)
    else:
        grad = np.where(ax <= 0.2, 2.0 - 8.0 * ax, np.where(inside, 0.4, 0.0))
    grad = grad.astype(x.dtype) if np.issubdtype(x.dtype, np.floating) else grad
    return float(grad) if grad.ndim == 0 else grad


def ste_surrogate(x):
    """
    Smooth stand-in for the unit step whose derivative is the triangle estimator

    0 below -0.5, 0.5 + 2x + 2x^2 on [-0.5, 0), 0.5 + 2x - 2x^2 on [0, 0.5), 1 above.
    """
    x = np.asarray(x, dtype=np.float64)
    out = np.where(x < 0, 0.5 + 2 * x + 2 * x * x, 0.5 + 2 * x - 2 * x * x)
    out = np.where(x < -STE_SUPPORT, 0.0, np.where(x >= STE_SUPPORT, 1.0, out))
    return float(out) if out.ndim == 0 else out


def declare_age_params(store, cfg):
    store.add(THRESHOLD_PARAM, (), init="constant", value=np.arctanh(cfg.threshold_init))


def threshold_value(params):
    """Theta = tanh(raw), strictly inside (-1, 1) for finite raw"""
    return ops.tanh(params[THRESHOLD_PARAM])


@dataclass
class GroupIncidence:
    """
    Binary N x N incidence: G[i, j] = 1 iff agent i belongs to hyperedge j

    ``tensor`` carries the straight-through adjoint; ``affinity`` and
    ``threshold`` are kept for inspection and gradient checks.
    """
    tensor: Tensor
    affinity: Tensor = None
    threshold: Tensor = None

    @property
    def matrix(self):
        return self.tensor.data.astype(np.int64)

    @property
    def num_agents(self):
        return self.tensor.shape[0]

    def members(self, j):
        return np.flatnonzero(self.matrix[:, j]).tolist()

    def memberships(self, i):
        return np.flatnonzero(self.matrix[i]).tolist()


def _step_region(variant):
    def forward(affinity, theta):
        return unit_step(affinity - theta).astype(affinity.dtype)

    def backward(grad, affinity, theta):
        surrogate = ste_grad(affinity - theta, variant).astype(grad.dtype)
        local = grad * surrogate
        return local, -np.sum(local).reshape(np.shape(theta))

    return CustomGradRegion(forward, backward, name=f"unit_step[{variant.value}]")


def estimate_groups(nodes, threshold, variant=SteVariant.TRIANGLE, detach=False):
    """
    Estimate overlapping groups from initial node features

    Args:
        nodes: (N, d_n) initial node features N^(0)
        threshold: scalar Tensor Theta (already squashed into (-1, 1))
        variant: surrogate derivative used in the backward pass
        detach: keep the forward value but pass no adjoint through G

    Returns:
        GroupIncidence
    """
    variant = SteVariant.parse(variant)
    n = nodes.shape[0]
    eye = np.eye(n, dtype=nodes.dtype)
    # self-affinity is pinned to 1 so every hyperedge contains its ego agent
    affinity = cosine_affinity(nodes) * (1.0 - eye) + eye
    G = _step_region(variant)(affinity, threshold)
    if detach:
        G = stop_gradient(G)
    return GroupIncidence(tensor=G, affinity=affinity, threshold=threshold)


def group_recovery(estimated, truth):
    """
    Pairwise membership precision / recall of an estimated incidence

    A pair {i, j}, i != j, is 'together' when either agent belongs to the
    other's hyperedge (G_ij or G_ji). Pairs are compared symmetrically.

    Returns:
        dict with precision, recall, true_positives, predicted, actual
    """
    est = np.asarray(estimated).astype(bool)
    tru = np.asarray(truth).astype(bool)
    est = est | est.T
    tru = tru | tru.T
    upper = np.triu(np.ones(est.shape, dtype=bool), k=1)
    tp = int(np.sum(est & tru & upper))
    predicted = int(np.sum(est & upper))
    actual = int(np.sum(tru & upper))
    return {
        "precision": tp / predicted if predicted else 1.0,
        "recall": tp / actual if actual else 1.0,
        "true_positives": tp,
        "predicted": predicted,
        "actual": actual,
    }
