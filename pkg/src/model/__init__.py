"""Multiscale relational encoder, multimodal decoder and loss"""

from .age import estimate_groups
from .decoder import decode
from .loss import variety_loss
from .mart import MART
from .marte import encode
from .presets import ModelPreset

__all__ = ["MART", "ModelPreset", "encode", "decode", "estimate_groups", "variety_loss"]
