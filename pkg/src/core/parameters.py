"""
Named, shaped, learnable arrays with deterministic initialization
"""
from collections import OrderedDict

import numpy as np

from ..utils.errors import DimensionError, VersionError
from .autodiff import Tensor


class ParameterStore:
    """
    Ordered collection of learnable tensors

    Parameters are declared once, in a fixed order, and drawn from a seeded
    generator in that order, so the same (declarations, seed) pair always
    yields the same values. Values are drawn in double precision and cast
    to the store dtype.
    """

    def __init__(self, dtype=np.float32, seed=0):
        self.dtype = np.dtype(dtype)
        self.seed = seed
        self._rng = np.random.default_rng(seed)
        self._params = OrderedDict()

    # declaration ----------------------------------------------------------
    def add(self, name, shape, init="glorot", value=None):
        """
        Declare a parameter

        Args:
            name: unique dotted name, e.g. ``prt.0.node_q.weight``
            shape: tuple of extents
            init: 'glorot' (uniform in ±sqrt(6/(fan_in+fan_out)) over the
                first two extents), 'zeros', 'ones' or 'constant'
            value: fill value for init='constant'

        Returns:
            The created Tensor
        """
        if name in self._params:
            raise ValueError(f"Parameter already declared: {name}")
        shape = tuple(int(s) for s in shape)
        if init == "glorot":
            fan_in, fan_out = (shape[0], shape[1]) if len(shape) >= 2 else (shape[0], shape[0])
            limit = np.sqrt(6.0 / (fan_in + fan_out))
            data = self._rng.uniform(-limit, limit, size=shape)
        elif init == "zeros":
            data = np.zeros(shape)
        elif init == "ones":
            data = np.ones(shape)
        elif init == "constant":
            data = np.full(shape, float(value))
        else:
            raise ValueError(f"Unknown initializer: {init}")
        tensor = Tensor(data.astype(self.dtype), requires_grad=True, name=name)
        self._params[name] = tensor
        return tensor

    def add_linear(self, prefix, fan_in, fan_out):
        """Declare ``prefix.weight`` (fan_in x fan_out, glorot) and ``prefix.bias`` (zeros)"""
        self.add(f"{prefix}.weight", (fan_in, fan_out), init="glorot")
        self.add(f"{prefix}.bias", (fan_out,), init="zeros")

    def add_layer_norm(self, prefix, dim):
        self.add(f"{prefix}.gain", (dim,), init="ones")
        self.add(f"{prefix}.bias", (dim,), init="zeros")

    # access ---------------------------------------------------------------
    def __getitem__(self, name):
        return self._params[name]

    def __contains__(self, name):
        return name in self._params

    def __len__(self):
        return len(self._params)

    def __iter__(self):
        return iter(self._params)

    def names(self):
        return list(self._params.keys())

    def items(self):
        return self._params.items()

    def shapes(self):
        return OrderedDict((name, p.shape) for name, p in self._params.items())

    def num_elements(self):
        return int(sum(p.size for p in self._params.values()))

    def group_of(self, name):
        """Top-level group of a dotted name (``prt.0.node_q.weight`` -> ``prt``)"""
        return name.split(".", 1)[0]

    # copies / state -------------------------------------------------------
    def copy(self, dtype=None):
        """Deep copy, optionally cast to another dtype"""
        clone = ParameterStore(dtype=dtype or self.dtype, seed=self.seed)
        for name, p in self._params.items():
            clone._params[name] = Tensor(p.data.astype(clone.dtype, copy=True),
                                         requires_grad=True, name=name)
        return clone

    def state_dict(self):
        return OrderedDict((name, p.data.copy()) for name, p in self._params.items())

    def load_state_dict(self, state):
        """
        Replace values in place

        Raises:
            VersionError: when names differ from the declared ones
            DimensionError: when a shape differs
        """
        if list(state.keys()) != self.names():
            missing = set(self.names()) ^ set(state.keys())
            raise VersionError(f"Parameter names do not match the model: {sorted(missing)[:5]}")
        for name, value in state.items():
            value = np.asarray(value)
            if value.shape != self._params[name].shape:
                raise DimensionError(
                    f"{name}: stored shape {value.shape} != declared {self._params[name].shape}")
            self._params[name].data = value.astype(self.dtype, copy=True)

    def zeros_like(self):
        return OrderedDict((name, np.zeros_like(p.data)) for name, p in self._params.items())
