"""Scene sources: synthetic generator, scene files and trajectory tables"""

from .batching import epoch_batches
from .inputs import model_inputs
from .scene_io import load_scenes, save_scenes
from .synthetic import SynthConfig, generate_synthetic
from .windowing import window_tsv

__all__ = ["SynthConfig", "generate_synthetic", "load_scenes", "save_scenes", "window_tsv",
           "model_inputs", "epoch_batches"]
