"""
Dataset-level evaluation of a trained model
"""
import logging

from ..utils.errors import DataError
from ..utils.log import log_fields
from .metrics import aggregate_reports, min_ade_fde

logger = logging.getLogger(__name__)


def evaluate(model, scenes, k=None, mode=None):
    """
    Mean of per-scene minADE_k / minFDE_k

    Args:
        model: MART
        scenes: labeled scenes
        k: heads to consider (default: all decoder heads)
        mode: 'marginal' or 'joint' (default: model.cfg.metric_mode)

    Raises:
        ConfigError: k outside 1..K
        DataError: empty list or unlabeled scene
    """
    mode = mode or model.cfg.metric_mode
    reports = []
    for scene in scenes:
        if not scene.labeled:
            raise DataError(f"scene {scene.scene_id} has no future trajectories to evaluate against")
        reports.append(min_ade_fde(model.predict(scene), scene.fut, mode=mode, k=k))
    report = aggregate_reports(reports)
    log_fields(logger, "evaluated", scenes=len(reports), **report.to_dict(), level=logging.DEBUG)
    return report
