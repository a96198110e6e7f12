"""
Central finite differences: the oracle for reverse-mode gradients
"""
from collections import OrderedDict

import numpy as np

from ..utils.errors import EvaluationError
from .autodiff import Tensor

RELATIVE_FLOOR = 1e-8


def _evaluate(f, params):
    value = f(params)
    if isinstance(value, Tensor):
        value = value.data
    value = np.asarray(value, dtype=np.float64)
    if value.size != 1:
        raise EvaluationError(f"finite differences need a scalar function, got shape {value.shape}")
    value = float(value.reshape(-1)[0])
    if not np.isfinite(value):
        raise EvaluationError(f"function returned a non-finite value: {value}")
    return value


def finite_diff_grad(f, params, eps=1e-5, names=None, skip=None):
    """
    Central-difference gradient of a scalar function of a ParameterStore

    Each scalar parameter p is replaced by p+eps and p-eps in turn and
    the derivative estimated as (f(p+eps) - f(p-eps)) / (2 eps). The store
    must hold double precision values; it is restored after every perturbation.

    Args:
        f: deterministic callable f(params) -> scalar
        params: ParameterStore (float64)
        eps: positive step
        names: optional subset of parameter names
        skip: optional predicate skip(name, flat_index) -> bool; skipped
            entries are reported as NaN

    Returns:
        OrderedDict name -> gradient array (float64)

    Raises:
        EvaluationError: if f returns a non-finite value
    """
    if eps <= 0:
        raise ValueError(f"eps must be positive, got {eps}")
    if params.dtype != np.float64:
        raise ValueError("finite differences run in double precision; pass params.copy(np.float64)")

    grads = OrderedDict()
    for name in (names if names is not None else params.names()):
        tensor = params[name]
        flat = tensor.data.reshape(-1)
        grad = np.zeros(flat.shape, dtype=np.float64)
        for idx in range(flat.size):
            if skip is not None and skip(name, idx):
                grad[idx] = np.nan
                continue
            original = flat[idx]
            flat[idx] = original + eps
            plus = _evaluate(f, params)
            flat[idx] = original - eps
            minus = _evaluate(f, params)
            flat[idx] = original
            grad[idx] = (plus - minus) / (2.0 * eps)
        grads[name] = grad.reshape(tensor.shape)
    return grads


def relative_error(analytic, numeric, floor=RELATIVE_FLOOR):
    """
    Elementwise |a - n| / max(|a|, floor)

    NaN entries of ``numeric`` (skipped perturbations) are ignored.
    """
    analytic = np.asarray(analytic, dtype=np.float64)
    numeric = np.asarray(numeric, dtype=np.float64)
    err = np.abs(analytic - numeric) / np.maximum(np.abs(analytic), floor)
    return np.where(np.isnan(numeric), 0.0, err)
