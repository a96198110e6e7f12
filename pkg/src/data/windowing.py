"""
Cut annotated trajectory tables into fixed-length scenes

Input rows are whitespace separated ``frame agent x y``. Frames need not be
evenly numbered; a window is ``t_p + t_f`` consecutive annotated frames and
keeps the agents present in every one of them.
"""
import logging
from pathlib import Path

import numpy as np

from ..core.scene import Scene
from ..utils.errors import ConfigError, ParseError
from ..utils.log import log_fields

logger = logging.getLogger(__name__)


def read_tsv(path):
    """Parse the table into {frame: {agent: (x, y)}}"""
    table = {}
    with open(path, "r", encoding="utf-8") as handle:
        for lineno, line in enumerate(handle, start=1):
            fields = line.split()
            if not fields or fields[0].startswith("#"):
                continue
            if len(fields) < 4:
                raise ParseError(f"expected 'frame agent x y', got {len(fields)} fields", line=lineno)
            try:
                frame, agent = float(fields[0]), float(fields[1])
                x, y = float(fields[2]), float(fields[3])
            except ValueError:
                raise ParseError(f"non-numeric field in {line.strip()!r}", line=lineno) from None
            if not (np.isfinite(x) and np.isfinite(y)):
                raise ParseError("non-finite position", line=lineno)
            frame = int(frame) if frame.is_integer() else frame
            agent = int(agent) if agent.is_integer() else agent
            table.setdefault(frame, {})[agent] = (x, y)
    return table


def window_tsv(path, t_p=8, t_f=12, stride=1):
    """
    Slice a trajectory table into labeled scenes

    Args:
        path: table file
        t_p, t_f: observed and predicted lengths in frames
        stride: frames between window starts

    Returns:
        Scenes named ``<file stem>-<first frame>``; windows without any
        fully present agent are dropped
    """
    if t_p < 2 or t_f < 1 or stride < 1:
        raise ConfigError(f"need t_p >= 2, t_f >= 1 and stride >= 1, got {t_p}/{t_f}/{stride}")
    table = read_tsv(path)
    frames = sorted(table)
    length = t_p + t_f
    stem = Path(path).stem

    scenes, dropped = [], 0
    for start in range(0, len(frames) - length + 1, stride):
        window = frames[start:start + length]
        present = set(table[window[0]])
        for frame in window[1:]:
            present &= set(table[frame])
        if not present:
            dropped += 1
            continue
        agents = sorted(present)
        tracks = np.array([[table[frame][agent] for frame in window] for agent in agents])
        scenes.append(Scene(scene_id=f"{stem}-{window[0]}", obs=tracks[:, :t_p], fut=tracks[:, t_p:],
                            agent_ids=agents))

    log_fields(logger, "windowed trajectories", path=str(path), frames=len(frames),
               scenes=len(scenes), dropped=dropped)
    return scenes
