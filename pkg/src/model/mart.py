"""
MART model: feature initialization, group estimation, two-scale encoder, decoder
"""
from ..core.autodiff import Tape, backprop
from ..core.parameters import ParameterStore
from ..utils.errors import ConfigError, DataError
from .decoder import PredictionSet, declare_decoder_params, decode
from .loss import variety_loss
from .marte import declare_encoder_params, encode


class MART:
    """
    Multiscale relational transformer for multi-agent trajectory prediction

    Implements the full forward path:
    1. Initial node features from observed trajectories
    2. Group incidence from node affinities (straight-through threshold)
    3. Pair-wise and hyper relational encoders in parallel
    4. K-head decoder producing offsets from each agent's last observed position
    """

    def __init__(self, cfg, params=None):
        """
        Args:
            cfg: TrainConfig
            params: optional ParameterStore; built from cfg.seed when omitted
        """
        self.cfg = cfg.validate()
        self.params = params if params is not None else self.build_parameters(cfg)
        expected = self.build_parameters(cfg, materialize=False)
        if list(self.params.shapes().items()) != list(expected.shapes().items()):
            raise ConfigError("Parameter store does not match the configured model dimensions")

    @staticmethod
    def build_parameters(cfg, seed=None, dtype=None, materialize=True):
        """
        Declare every parameter in a fixed order and initialize deterministically

        Args:
            cfg: TrainConfig
            seed: initialization seed (defaults to cfg.seed)
            dtype: storage dtype (defaults to cfg.dtype)
            materialize: when False only shapes matter (values are zeros)
        """
        store = ParameterStore(dtype=dtype or cfg.dtype, seed=cfg.seed if seed is None else seed)
        if not materialize:
            store = _ShapeOnlyStore(store)
        declare_encoder_params(store, cfg)
        declare_decoder_params(store, cfg)
        return store.inner if not materialize else store

    # forward path ---------------------------------------------------------
    def encode(self, scene, fixed_groups=None, detach_groups=False):
        return encode(scene, self.params, self.cfg, fixed_groups=fixed_groups,
                      detach_groups=detach_groups)

    def forward(self, scene, fixed_groups=None, detach_groups=False):
        """
        Returns:
            (PredictionSet with absolute positions (K, N, T_f, 2), EncoderOutput)
        """
        if scene.t_p != self.cfg.t_p:
            raise ConfigError(f"scene {scene.scene_id} has T_p={scene.t_p}, model expects {self.cfg.t_p}")
        enc = self.encode(scene, fixed_groups=fixed_groups, detach_groups=detach_groups)
        raw = decode(enc, enc.n0, self.params, self.cfg.k, self.cfg.t_f)
        anchor = scene.obs[:, -1, :].astype(self.params.dtype)[None, :, None, :]
        return PredictionSet(preds=raw.preds + anchor), enc

    def loss(self, scene, reduction=None, fixed_groups=None, detach_groups=False):
        if not scene.labeled:
            raise DataError(f"scene {scene.scene_id} has no future trajectories")
        if scene.t_f != self.cfg.t_f:
            raise ConfigError(f"scene {scene.scene_id} has T_f={scene.t_f}, model expects {self.cfg.t_f}")
        preds, _ = self.forward(scene, fixed_groups=fixed_groups, detach_groups=detach_groups)
        return variety_loss(preds, scene.fut, reduction or self.cfg.loss_reduction)

    def loss_and_grads(self, scene, reduction=None, detach_groups=False):
        """
        One taped forward/backward pass

        Returns:
            (loss value, OrderedDict name -> adjoint)
        """
        with Tape() as tape:
            loss = self.loss(scene, reduction=reduction, detach_groups=detach_groups)
        grads = backprop(tape, loss, self.params)
        return float(loss.item()), grads

    def predict(self, scene):
        preds, _ = self.forward(scene)
        return preds.numpy()

    def groups(self, scene):
        """Estimated (N, N) incidence; only encoders with a group branch have one"""
        incidence = self.encode(scene).group_incidence
        if incidence is None:
            raise ConfigError(f"encoder {self.cfg.encoder!r} does not estimate groups")
        return incidence.matrix

    def num_parameters(self):
        return self.params.num_elements()


class _ShapeOnlyStore:
    """Declaration proxy that skips random draws (parameter counting, shape checks)"""

    def __init__(self, inner):
        self.inner = inner

    def add(self, name, shape, init="glorot", value=None):
        return self.inner.add(name, shape, init="zeros")

    def add_linear(self, prefix, fan_in, fan_out):
        self.add(f"{prefix}.weight", (fan_in, fan_out))
        self.add(f"{prefix}.bias", (fan_out,))

    def add_layer_norm(self, prefix, dim):
        self.add(f"{prefix}.gain", (dim,))
        self.add(f"{prefix}.bias", (dim,))


def shape_manifest(cfg):
    """Ordered (name, shape) list of the model's parameters without drawing values"""
    return list(MART.build_parameters(cfg, materialize=False).shapes().items())
