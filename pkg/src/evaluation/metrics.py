"""
Best-of-K displacement metrics (minADE_k / minFDE_k)
"""
from dataclasses import asdict, dataclass

import numpy as np

from ..utils.errors import ConfigError, DataError, DimensionError

MODES = ("marginal", "joint")


@dataclass
class MetricReport:
    """minADE_k / minFDE_k in meters"""
    min_ade: float
    min_fde: float
    k: int
    mode: str

    def to_dict(self):
        return asdict(self)


def pointwise_errors(preds, gt):
    """
    Euclidean error for every head, agent and step

    Args:
        preds: (K, N, T_f, 2)
        gt: (N, T_f, 2)

    Returns:
        (K, N, T_f) array
    """
    preds = np.asarray(getattr(preds, "data", preds), dtype=np.float64)
    gt = np.asarray(gt, dtype=np.float64)
    if preds.ndim != 4 or preds.shape[1:] != gt.shape:
        raise DimensionError(f"predictions {preds.shape} do not match ground truth {gt.shape}")
    return np.linalg.norm(preds - gt[None], axis=-1)


def min_ade_fde(preds, gt, mode="marginal", k=None):
    """
    Smallest average / final displacement error among the first k heads

    marginal: each agent keeps its own best head, then agents are averaged
    joint: one head is chosen for the whole scene

    Args:
        preds: (K, N, T_f, 2) predictions
        gt: (N, T_f, 2) ground truth
        mode: 'marginal' or 'joint'
        k: number of heads to consider (default: all)

    Returns:
        MetricReport
    """
    if mode not in MODES:
        raise ConfigError(f"Unknown metric mode {mode!r}; expected one of {list(MODES)}")
    errors = pointwise_errors(preds, gt)
    total = errors.shape[0]
    k = total if k is None else int(k)
    if not 1 <= k <= total:
        raise ConfigError(f"k={k} exceeds the {total} available prediction heads")
    errors = errors[:k]
    ade = errors.mean(axis=-1)          # (k, N)
    fde = errors[..., -1]               # (k, N)
    if mode == "marginal":
        min_ade = ade.min(axis=0).mean()
        min_fde = fde.min(axis=0).mean()
    else:
        min_ade = ade.mean(axis=1).min()
        min_fde = fde.mean(axis=1).min()
    return MetricReport(min_ade=float(min_ade), min_fde=float(min_fde), k=k, mode=mode)


def aggregate_reports(reports):
    """
    Dataset mean of per-scene reports

    Raises:
        DataError: on an empty list (never returns NaN)
    """
    reports = list(reports)
    if not reports:
        raise DataError("cannot aggregate metrics over an empty scene list")
    return MetricReport(
        min_ade=float(np.mean([r.min_ade for r in reports])),
        min_fde=float(np.mean([r.min_fde for r in reports])),
        k=reports[0].k,
        mode=reports[0].mode,
    )
