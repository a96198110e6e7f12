"""Optimizer, training loop, checkpoints, gradient checks and cost counters"""

from .checkpoint import load_checkpoint, save_checkpoint
from .counting import count_macs, count_params
from .gradcheck import gradcheck
from .optimizer import Adam
from .trainer import Trainer

__all__ = ["Adam", "Trainer", "save_checkpoint", "load_checkpoint", "gradcheck",
           "count_params", "count_macs"]
