"""
Adam with step learning-rate decay
"""
from collections import OrderedDict

import numpy as np

from ..utils.errors import ConfigError, VersionError


def step_decay(base_lr, epoch, factor=0.5, every=100):
    """Learning rate for a 0-based epoch: base_lr * factor ** (epoch // every)"""
    if every < 1:
        raise ConfigError(f"lr_decay_every must be positive, got {every}")
    return base_lr * factor ** (epoch // every)


class Adam:
    """
    Adam over a ParameterStore, updating values in place

    Moments are kept in the store's dtype. With lr == 0 every update is an
    exact zero, so parameter values stay bit-identical.
    """

    def __init__(self, params, lr=1e-3, beta1=0.9, beta2=0.999, eps=1e-8):
        self.params = params
        self.lr = lr
        self.beta1 = beta1
        self.beta2 = beta2
        self.eps = eps
        self.t = 0
        self.m = params.zeros_like()
        self.v = params.zeros_like()

    def step(self, grads, lr=None):
        """
        Apply one update

        Args:
            grads: mapping name -> adjoint array (same shapes as the parameters)
            lr: learning rate for this step (defaults to self.lr)
        """
        lr = self.lr if lr is None else lr
        self.t += 1
        correction1 = 1.0 - self.beta1 ** self.t
        correction2 = 1.0 - self.beta2 ** self.t
        for name, param in self.params.items():
            grad = np.asarray(grads[name], dtype=param.data.dtype)
            m, v = self.m[name], self.v[name]
            m *= self.beta1
            m += (1.0 - self.beta1) * grad
            v *= self.beta2
            v += (1.0 - self.beta2) * grad * grad
            update = lr * (m / correction1) / (np.sqrt(v / correction2) + self.eps)
            param.data = param.data - update.astype(param.data.dtype)

    def state_dict(self):
        return {"t": self.t,
                "m": OrderedDict((k, a.copy()) for k, a in self.m.items()),
                "v": OrderedDict((k, a.copy()) for k, a in self.v.items())}

    def load_state_dict(self, state):
        names = self.params.names()
        if list(state["m"].keys()) != names or list(state["v"].keys()) != names:
            raise VersionError("Optimizer state does not match the parameter names")
        self.t = int(state["t"])
        dtype = self.params.dtype
        self.m = OrderedDict((k, np.asarray(a, dtype=dtype).copy()) for k, a in state["m"].items())
        self.v = OrderedDict((k, np.asarray(a, dtype=dtype).copy()) for k, a in state["v"].items())
