"""
Scene and feature records shared by the model and the data tools
"""
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from ..utils.errors import FormatError


@dataclass
class Scene:
    """
    One prediction instance

    Coordinates are absolute 2-D positions in meters. The model input
    (relative displacements or absolute + relative) is derived from ``obs``
    by ``src.data.inputs.model_inputs``.
    """
    scene_id: str
    obs: np.ndarray                         # (N, T_p, 2)
    fut: Optional[np.ndarray] = None        # (N, T_f, 2), present iff labeled
    group_truth: Optional[np.ndarray] = None  # (N, N) planted membership, synthetic only
    agent_ids: list = field(default_factory=list)

    def __post_init__(self):
        self.scene_id = str(self.scene_id)
        self.obs = np.asarray(self.obs, dtype=np.float64)
        if self.obs.ndim != 3 or self.obs.shape[-1] < 2:
            raise FormatError(f"scene {self.scene_id}: obs must be (N, T_p, 2), got {self.obs.shape}")
        n_agents, t_p = self.obs.shape[:2]
        if n_agents < 1:
            raise FormatError(f"scene {self.scene_id}: needs at least one agent")
        if t_p < 2:
            raise FormatError(f"scene {self.scene_id}: needs T_p >= 2, got {t_p}")
        if not np.all(np.isfinite(self.obs)):
            raise FormatError(f"scene {self.scene_id}: observations contain non-finite values")
        if self.fut is not None:
            self.fut = np.asarray(self.fut, dtype=np.float64)
            if self.fut.ndim != 3 or self.fut.shape[0] != n_agents or self.fut.shape[-1] != 2:
                raise FormatError(
                    f"scene {self.scene_id}: fut must be ({n_agents}, T_f, 2), got {self.fut.shape}")
            if not np.all(np.isfinite(self.fut)):
                raise FormatError(f"scene {self.scene_id}: future contains non-finite values")
        if self.group_truth is not None:
            self.group_truth = np.asarray(self.group_truth, dtype=np.int64)
            if self.group_truth.shape != (n_agents, n_agents):
                raise FormatError(
                    f"scene {self.scene_id}: group_truth must be ({n_agents}, {n_agents})")
        if not self.agent_ids:
            self.agent_ids = list(range(n_agents))

    @property
    def num_agents(self):
        return self.obs.shape[0]

    @property
    def t_p(self):
        return self.obs.shape[1]

    @property
    def t_f(self):
        return None if self.fut is None else self.fut.shape[1]

    @property
    def labeled(self):
        return self.fut is not None

    def permuted(self, order):
        """Same scene with agents relabeled: agent i of the result is agent order[i]"""
        order = np.asarray(order)
        group = None
        if self.group_truth is not None:
            group = self.group_truth[np.ix_(order, order)]
        return Scene(
            scene_id=self.scene_id,
            obs=self.obs[order],
            fut=None if self.fut is None else self.fut[order],
            group_truth=group,
            agent_ids=[self.agent_ids[i] for i in order],
        )


@dataclass
class FeatureSet:
    """
    Initial features of one scene

    ``pair_edges[i, j]`` is the directed edge from source j to destination i;
    all N^2 ordered pairs, self-loops included.
    """
    nodes: object        # Tensor (N, d_n)
    pair_edges: object   # Tensor (N, N, d_e)
    hyperedges: object   # Tensor (N, d_e)
