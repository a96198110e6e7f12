"""
Best-of-K variety loss
"""
from ..core import ops
from ..core.autodiff import as_tensor
from ..utils.errors import ConfigError, DimensionError

REDUCTIONS = ("per_point", "per_scene")


def displacement(preds, gt):
    """Pointwise Euclidean error, (K, N, T_f)"""
    preds = getattr(preds, "preds", preds)
    preds = as_tensor(preds)
    gt = as_tensor(gt, dtype=preds.dtype)
    if preds.ndim != 4 or tuple(preds.shape[1:]) != tuple(gt.shape):
        raise DimensionError(f"predictions {preds.shape} do not match ground truth {gt.shape}")
    return ops.norm_last(preds - gt)


def variety_loss(preds, gt, reduction="per_scene"):
    """
    Minimum-over-heads L2 loss

    per_point: (1 / N T_f) sum_n sum_t min_k |Y - Y_k| (min inside the sums)
    per_scene: min_k of the scene-mean pointwise error (min outside)

    Only the selected head (lowest index on ties) receives an adjoint.

    Args:
        preds: PredictionSet or (K, N, T_f, 2) Tensor
        gt: (N, T_f, 2) ground truth
        reduction: 'per_point' or 'per_scene'

    Returns:
        scalar Tensor
    """
    errors = displacement(preds, gt)
    if reduction == "per_point":
        return ops.mean(ops.amin(errors, axis=0))
    if reduction == "per_scene":
        return ops.amin(ops.mean(errors, axis=(1, 2)), axis=0)
    raise ConfigError(f"Unknown loss reduction {reduction!r}; expected one of {list(REDUCTIONS)}")
