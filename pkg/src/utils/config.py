"""
Run configuration: dataclass defaults, named presets, key=value files and flag overrides
"""
import dataclasses
from dataclasses import dataclass, fields
from pathlib import Path

import numpy as np
import yaml

from .errors import ConfigError

PRESETS_DIR = Path(__file__).resolve().parents[2] / "presets"

STE_VARIANTS = ("clipped_passthrough", "triangle", "long_tailed")
LOSS_REDUCTIONS = ("per_point", "per_scene")
METRIC_MODES = ("marginal", "joint")
SCALE_MODES = ("head", "model")
PRECISIONS = ("single", "double")
ENCODERS = ("marte", "pair_only", "group_only", "vanilla")
GROUP_AFFINITIES = ("centered", "raw")


@dataclass
class TrainConfig:
    """
    Everything needed to build, train and evaluate one model

    Defaults mirror the ETH-UCY setting (d_n=d_e=64, d_h=128, d_D=128,
    8 heads, 4 layers, 20 decoder heads).
    """
    # model dimensions
    d_in: int = 2
    t_p: int = 8
    t_f: int = 12
    d_n: int = 64
    d_e: int = 64
    d_h: int = 128
    d_d: int = 128
    layers: int = 4
    heads: int = 8
    k: int = 20
    attention_scale: str = "head"       # "head": sqrt(d_n/heads), "model": sqrt(d_n)
    encoder: str = "marte"              # marte | pair_only | group_only | vanilla

    # group estimator
    ste_variant: str = "triangle"
    threshold_init: float = 0.5
    group_affinity: str = "centered"    # affinity on scene-centered (centered) or raw N^(0)

    # optimization
    lr: float = 1.0e-3
    batch_size: int = 64
    epochs: int = 300
    max_steps: int = 0                  # 0 = no step cap
    lr_decay_factor: float = 0.5
    lr_decay_every: int = 100           # epochs
    seed: int = 0
    workers: int = 1
    precision: str = "single"

    # objective / evaluation
    loss_reduction: str = "per_scene"
    metric_mode: str = "marginal"

    @property
    def head_dim(self):
        return self.d_n // self.heads

    @property
    def dtype(self):
        return np.float64 if self.precision == "double" else np.float32

    def validate(self):
        """
        Check value ranges and cross-field consistency

        Raises:
            ConfigError: on the first violated constraint
        """
        for name in ("d_in", "t_p", "t_f", "d_n", "d_e", "d_h", "d_d", "heads", "k",
                     "batch_size", "lr_decay_every", "workers"):
            if getattr(self, name) <= 0:
                raise ConfigError(f"{name} must be positive, got {getattr(self, name)}")
        if self.layers < 0:
            raise ConfigError(f"layers must be non-negative, got {self.layers}")
        if self.epochs < 0 or self.max_steps < 0:
            raise ConfigError("epochs and max_steps must be non-negative")
        if self.t_p < 2:
            raise ConfigError(f"t_p must be at least 2, got {self.t_p}")
        if self.d_n % self.heads != 0:
            raise ConfigError(f"d_n={self.d_n} is not divisible by heads={self.heads}")
        if self.d_n % 2 != 0:
            raise ConfigError(f"d_n must be even for positional encoding, got {self.d_n}")
        if self.d_d < 2:
            raise ConfigError(f"d_d must be at least 2, got {self.d_d}")
        if self.d_in not in (2, 4):
            raise ConfigError(f"d_in must be 2 (relative) or 4 (absolute + relative), got {self.d_in}")
        if not -1.0 < self.threshold_init < 1.0:
            raise ConfigError(f"threshold_init must lie in (-1, 1), got {self.threshold_init}")
        if self.lr < 0:
            raise ConfigError(f"lr must be non-negative, got {self.lr}")
        _check_choice("ste_variant", self.ste_variant, STE_VARIANTS)
        _check_choice("loss_reduction", self.loss_reduction, LOSS_REDUCTIONS)
        _check_choice("metric_mode", self.metric_mode, METRIC_MODES)
        _check_choice("attention_scale", self.attention_scale, SCALE_MODES)
        _check_choice("precision", self.precision, PRECISIONS)
        _check_choice("encoder", self.encoder, ENCODERS)
        _check_choice("group_affinity", self.group_affinity, GROUP_AFFINITIES)
        return self

    def to_dict(self):
        return dataclasses.asdict(self)

    def model_signature(self):
        """Fields that fix parameter names and shapes"""
        return {name: getattr(self, name)
                for name in ("d_in", "t_p", "t_f", "d_n", "d_e", "d_h", "d_d",
                             "layers", "heads", "k", "encoder")}

    def replace(self, **changes):
        return apply_overrides(self, changes)


def _check_choice(name, value, choices):
    if value not in choices:
        raise ConfigError(f"{name} must be one of {list(choices)}, got {value!r}")


def _coerce(name, raw, target_type):
    try:
        if target_type is int:
            value = float(raw)
            if not value.is_integer():
                raise ValueError
            return int(value)
        if target_type is float:
            return float(raw)
        return str(raw).strip()
    except (TypeError, ValueError):
        raise ConfigError(f"{name}: cannot interpret {raw!r} as {target_type.__name__}") from None


def _field_types():
    hints = {"int": int, "float": float, "str": str}
    return {f.name: hints.get(f.type if isinstance(f.type, str) else f.type.__name__, str)
            for f in fields(TrainConfig)}


def apply_overrides(cfg, overrides):
    """
    Return a copy of cfg with overrides applied and type-coerced

    Args:
        cfg: TrainConfig instance
        overrides: mapping of field name -> raw value (strings allowed)

    Returns:
        New, validated TrainConfig
    """
    types = _field_types()
    changes = {}
    for key, raw in overrides.items():
        name = key.replace("-", "_")
        if name not in types:
            raise ConfigError(f"Unknown configuration key: {key}")
        changes[name] = _coerce(name, raw, types[name])
    return dataclasses.replace(cfg, **changes).validate()


def parse_key_value_text(text, source="<config>"):
    """
    Parse flat key=value text (one pair per line, '#' comments)

    Returns:
        Ordered dict of raw string values
    """
    values = {}
    for lineno, line in enumerate(text.splitlines(), start=1):
        stripped = line.split("#", 1)[0].strip()
        if not stripped:
            continue
        if "=" not in stripped:
            raise ConfigError(f"{source}:{lineno}: expected key=value, got {line.strip()!r}")
        key, value = stripped.split("=", 1)
        key = key.strip()
        if not key:
            raise ConfigError(f"{source}:{lineno}: empty key")
        values[key] = value.strip()
    return values


def load_config_file(path):
    path = Path(path)
    if not path.exists():
        raise ConfigError(f"Config file not found: {path}")
    return parse_key_value_text(path.read_text(encoding="utf-8"), source=str(path))


def load_scenarios(path=None):
    """
    Load named scenarios (synthetic data + training overrides) from YAML

    Args:
        path: YAML file, defaults to presets/scenarios.yaml

    Returns:
        Dictionary scenario name -> scenario dict
    """
    path = Path(path) if path is not None else PRESETS_DIR / "scenarios.yaml"
    if not path.exists():
        raise ConfigError(f"Scenario file not found: {path}")
    with open(path, "r", encoding="utf-8") as fh:
        data = yaml.safe_load(fh) or {}
    scenarios = data.get("scenarios")
    if not isinstance(scenarios, dict):
        raise ConfigError(f"{path}: expected a top-level 'scenarios' mapping")
    return scenarios


def build_config(preset=None, config_file=None, overrides=None):
    """
    Resolve a TrainConfig from its layered sources

    Order (later wins): dataclass defaults, named model preset, key=value
    config file, explicit overrides (CLI flags).
    """
    values = {}
    if preset is not None:
        from ..model.presets import ModelPreset
        try:
            values.update(ModelPreset.config_values(preset))
        except ValueError as exc:
            raise ConfigError(str(exc)) from None
    if config_file is not None:
        values.update(load_config_file(config_file))
    if overrides:
        values.update({key.replace("-", "_"): value for key, value in overrides.items()})
    return apply_overrides(TrainConfig(), values)
