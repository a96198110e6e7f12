"""
Scene files: one JSON object per line

    {"scene_id": "eth-0001",
     "agents": [{"id": 3, "obs": [[x, y], ...], "fut": [[x, y], ...]}, ...],
     "group_truth": [[1, 0], [0, 1]]}

``fut`` is present for every agent or for none; ``group_truth`` is optional.
Floats are written with full repr precision, so save/load is exact.
"""
import json
import logging
from pathlib import Path

import numpy as np

from ..core.scene import Scene
from ..utils.errors import FormatError, ParseError
from ..utils.log import log_fields

logger = logging.getLogger(__name__)


def scene_to_record(scene):
    agents = []
    for index, agent_id in enumerate(scene.agent_ids):
        agent = {"id": _plain(agent_id), "obs": scene.obs[index].tolist()}
        if scene.fut is not None:
            agent["fut"] = scene.fut[index].tolist()
        agents.append(agent)
    record = {"scene_id": scene.scene_id, "agents": agents}
    if scene.group_truth is not None:
        record["group_truth"] = scene.group_truth.tolist()
    return record


def _plain(value):
    return value.item() if hasattr(value, "item") else value


def _track(agent, key, scene_id, lineno):
    track = np.asarray(agent[key], dtype=np.float64)
    if track.ndim != 2 or track.shape[1] != 2:
        raise FormatError(f"line {lineno}: scene {scene_id}: agent {agent.get('id')} "
                          f"{key} must be a list of [x, y] pairs")
    return track


def record_to_scene(record, lineno=None):
    """Build a Scene from one decoded record; schema violations raise FormatError"""
    if not isinstance(record, dict) or "scene_id" not in record or "agents" not in record:
        raise ParseError("record needs 'scene_id' and 'agents'", line=lineno)
    scene_id = record["scene_id"]
    agents = record["agents"]
    if not isinstance(agents, list) or not agents:
        raise FormatError(f"line {lineno}: scene {scene_id}: 'agents' must be a non-empty list")

    try:
        obs = [_track(agent, "obs", scene_id, lineno) for agent in agents]
    except (KeyError, TypeError, ValueError) as exc:
        raise ParseError(f"scene {scene_id}: bad agent observation ({exc})", line=lineno) from None
    if len({track.shape[0] for track in obs}) != 1:
        raise FormatError(f"line {lineno}: scene {scene_id}: agents have different observation lengths")

    labeled = ["fut" in agent for agent in agents]
    fut = None
    if any(labeled):
        if not all(labeled):
            raise FormatError(f"line {lineno}: scene {scene_id}: 'fut' must be given for every agent or none")
        try:
            fut = np.stack([_track(agent, "fut", scene_id, lineno) for agent in agents])
        except ValueError:
            raise FormatError(f"line {lineno}: scene {scene_id}: agents have different future lengths") from None

    try:
        return Scene(scene_id=scene_id, obs=np.stack(obs), fut=fut,
                     group_truth=record.get("group_truth"),
                     agent_ids=[agent.get("id", index) for index, agent in enumerate(agents)])
    except FormatError as exc:
        raise FormatError(f"line {lineno}: {exc}") from None


def load_scenes(path):
    """
    Read every scene of a JSONL scene file

    Blank lines are skipped; an empty file gives an empty list.

    Raises:
        ParseError: a line is not valid JSON (carries the line number)
        FormatError: a record violates the scene schema
    """
    scenes = []
    with open(path, "r", encoding="utf-8") as handle:
        for lineno, line in enumerate(handle, start=1):
            if not line.strip():
                continue
            try:
                record = json.loads(line)
            except json.JSONDecodeError as exc:
                raise ParseError(f"invalid JSON ({exc.msg})", line=lineno) from None
            scenes.append(record_to_scene(record, lineno))
    log_fields(logger, "loaded scenes", path=str(path), scenes=len(scenes), level=logging.DEBUG)
    return scenes


def save_scenes(scenes, path):
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", encoding="utf-8") as handle:
        for scene in scenes:
            handle.write(json.dumps(scene_to_record(scene)))
            handle.write("\n")
    log_fields(logger, "saved scenes", path=str(path), scenes=len(scenes), level=logging.DEBUG)
    return path
