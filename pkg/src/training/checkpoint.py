"""
Checkpoint archives

A checkpoint is a zip archive with two or three members:

    manifest.json   format version, TrainConfig, ordered parameter names/shapes,
                    training position (epoch, step) and optimizer step count
    params.bin      float32, little-endian, row-major values concatenated
                    in manifest order
    optimizer.bin   optional Adam moments (all m, then all v), same encoding

Single-precision stores round-trip bit-exactly; double-precision stores are
rounded to float32 on save.
"""
import json
import logging
import zipfile
from collections import OrderedDict
from pathlib import Path

import numpy as np

from ..model.mart import MART
from ..utils.config import TrainConfig, apply_overrides
from ..utils.errors import FormatError, VersionError
from ..utils.log import log_fields

logger = logging.getLogger(__name__)

FORMAT_VERSION = 1
PAYLOAD_DTYPE = np.dtype("<f4")


def _pack(arrays):
    if not arrays:
        return b""
    return np.concatenate([np.asarray(a).astype(PAYLOAD_DTYPE).ravel(order="C") for a in arrays]).tobytes()


def _unpack(payload, shapes, member):
    total = int(sum(int(np.prod(shape)) for shape in shapes))
    if len(payload) != PAYLOAD_DTYPE.itemsize * total:
        raise FormatError(f"{member}: {len(payload)} bytes, expected {PAYLOAD_DTYPE.itemsize * total}")
    flat = np.frombuffer(payload, dtype=PAYLOAD_DTYPE)
    arrays, offset = [], 0
    for shape in shapes:
        size = int(np.prod(shape))
        arrays.append(flat[offset:offset + size].reshape(shape).copy())
        offset += size
    return arrays


def save_checkpoint(path, cfg, params, optimizer=None, epoch=0, step=0):
    """
    Write a checkpoint archive

    Args:
        path: destination file
        cfg: TrainConfig the parameters belong to
        params: ParameterStore
        optimizer: optional Adam whose moments are stored for resuming
        epoch, step: number of completed epochs / optimizer steps
    """
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    manifest = {
        "format_version": FORMAT_VERSION,
        "config": cfg.to_dict(),
        "parameters": [{"name": name, "shape": list(shape)} for name, shape in params.shapes().items()],
        "epoch": int(epoch),
        "step": int(step),
        "optimizer_t": None if optimizer is None else int(optimizer.t),
    }
    with zipfile.ZipFile(path, "w", compression=zipfile.ZIP_STORED) as archive:
        archive.writestr("manifest.json", json.dumps(manifest, indent=2))
        archive.writestr("params.bin", _pack([p.data for _, p in params.items()]))
        if optimizer is not None:
            archive.writestr("optimizer.bin", _pack(list(optimizer.m.values()) + list(optimizer.v.values())))
    log_fields(logger, "saved checkpoint", path=str(path), parameters=params.num_elements(),
               epoch=epoch, step=step)
    return path


class Checkpoint:
    """Decoded checkpoint contents"""

    def __init__(self, manifest, state, optimizer_state=None):
        self.manifest = manifest
        self.state = state
        self.optimizer_state = optimizer_state

    @property
    def config(self):
        return apply_overrides(TrainConfig(), self.manifest["config"])

    @property
    def epoch(self):
        return self.manifest.get("epoch", 0)

    @property
    def step(self):
        return self.manifest.get("step", 0)

    def build_model(self, cfg=None):
        """
        Instantiate MART with the stored values

        Args:
            cfg: optional run configuration; its model dimensions must equal
                the stored ones (training settings may differ)

        Raises:
            VersionError: dimensions differ from the checkpoint
        """
        stored = self.config
        if cfg is None:
            cfg = stored
        elif cfg.model_signature() != stored.model_signature():
            differing = sorted(key for key, value in cfg.model_signature().items()
                               if stored.model_signature()[key] != value)
            raise VersionError(f"Checkpoint was written for different model dimensions: {differing}")
        params = MART.build_parameters(cfg, materialize=False).copy(dtype=cfg.dtype)
        params.load_state_dict(self.state)
        return MART(cfg, params=params)


def load_checkpoint(path):
    """
    Read a checkpoint archive

    Raises:
        VersionError: unknown format version
        FormatError: missing members or a payload of the wrong length
    """
    path = Path(path)
    try:
        archive = zipfile.ZipFile(path, "r")
    except (OSError, zipfile.BadZipFile) as exc:
        raise FormatError(f"{path}: not a checkpoint archive ({exc})") from None
    with archive:
        members = set(archive.namelist())
        if not {"manifest.json", "params.bin"} <= members:
            raise FormatError(f"{path}: missing manifest.json or params.bin")
        manifest = json.loads(archive.read("manifest.json").decode("utf-8"))
        if manifest.get("format_version") != FORMAT_VERSION:
            raise VersionError(
                f"{path}: checkpoint format {manifest.get('format_version')}, expected {FORMAT_VERSION}")
        names = [entry["name"] for entry in manifest["parameters"]]
        shapes = [tuple(entry["shape"]) for entry in manifest["parameters"]]
        values = _unpack(archive.read("params.bin"), shapes, "params.bin")
        state = OrderedDict(zip(names, values))

        optimizer_state = None
        if "optimizer.bin" in members and manifest.get("optimizer_t") is not None:
            moments = _unpack(archive.read("optimizer.bin"), shapes + shapes, "optimizer.bin")
            optimizer_state = {"t": manifest["optimizer_t"],
                               "m": OrderedDict(zip(names, moments[:len(names)])),
                               "v": OrderedDict(zip(names, moments[len(names):]))}
    log_fields(logger, "loaded checkpoint", path=str(path), level=logging.DEBUG)
    return Checkpoint(manifest, state, optimizer_state)
