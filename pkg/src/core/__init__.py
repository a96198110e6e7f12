"""Reverse-mode autodiff, parameter storage and scene records"""

from .autodiff import CustomGradRegion, Tape, Tensor, backprop
from .finite_diff import finite_diff_grad
from .parameters import ParameterStore
from .scene import Scene

__all__ = ["Tape", "Tensor", "backprop", "CustomGradRegion", "ParameterStore",
           "finite_diff_grad", "Scene"]
