"""
Multiscale Relational Transformer - multi-agent trajectory prediction in numpy

This package provides a from-scratch reverse-mode autodiff, a two-scale
relational encoder (pair-wise and group-wise) with a learned group
estimator, a multi-head trajectory decoder, and the tools to train,
evaluate and inspect it.
"""

__version__ = "0.1.0"

from .model.mart import MART
from .model.presets import ModelPreset
from .utils.config import TrainConfig

__all__ = [
    "MART",
    "ModelPreset",
    "TrainConfig",
]
