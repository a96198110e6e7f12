"""Trajectory metrics, model evaluation and reference predictors"""

from .baselines import constant_velocity_report
from .evaluator import evaluate
from .metrics import MetricReport, aggregate_reports, min_ade_fde

__all__ = ["MetricReport", "min_ade_fde", "aggregate_reports", "evaluate", "constant_velocity_report"]
