"""
Reference predictors used as sanity floors
"""
from ..data.inputs import constant_velocity
from .metrics import aggregate_reports, min_ade_fde


def constant_velocity_report(scenes, t_f, mode="marginal"):
    """
    Metrics of the constant-velocity extrapolation over labeled scenes

    The single extrapolated future counts as one head, so the report has k=1.
    """
    reports = []
    for scene in scenes:
        pred = constant_velocity(scene.obs, t_f)[None]
        reports.append(min_ade_fde(pred, scene.fut, mode=mode))
    return aggregate_reports(reports)
