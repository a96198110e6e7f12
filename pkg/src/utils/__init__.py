"""Configuration, logging and error helpers"""

from .config import TrainConfig, build_config
from .errors import MartError
from .log import configure_logging

__all__ = ["TrainConfig", "build_config", "configure_logging", "MartError"]
