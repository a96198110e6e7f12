"""
Differentiable primitives

Each primitive computes its forward value with numpy and registers an
adjoint on the active tape. Broadcasting is allowed wherever numpy allows it;
adjoints are summed back to operand shapes by ``backprop``.
"""
import numpy as np
from scipy import special

from ..utils.errors import DimensionError
from .autodiff import Tensor, as_tensor, make_result

LAYER_NORM_EPS = 1e-5


def _operands(a, b):
    """Wrap constants so they adopt the floating dtype of the tensor operand"""
    if isinstance(a, Tensor) and not isinstance(b, Tensor):
        b = Tensor(np.asarray(b, dtype=a.dtype))
    elif isinstance(b, Tensor) and not isinstance(a, Tensor):
        a = Tensor(np.asarray(a, dtype=b.dtype))
    return as_tensor(a), as_tensor(b)


def _normalize_axes(axis, ndim):
    if axis is None:
        return tuple(range(ndim))
    if isinstance(axis, int):
        axis = (axis,)
    return tuple(sorted(ax % ndim for ax in axis))


# elementwise ---------------------------------------------------------------

def add(a, b):
    a, b = _operands(a, b)
    return make_result(a.data + b.data, (a, b), lambda g: (g, g))


def sub(a, b):
    a, b = _operands(a, b)
    return make_result(a.data - b.data, (a, b), lambda g: (g, -g))


def mul(a, b):
    a, b = _operands(a, b)
    return make_result(a.data * b.data, (a, b), lambda g: (g * b.data, g * a.data))


def div(a, b):
    a, b = _operands(a, b)

    def backward(g):
        return g / b.data, -g * a.data / (b.data * b.data)

    return make_result(a.data / b.data, (a, b), backward)


def neg(a):
    a = as_tensor(a)
    return make_result(-a.data, (a,), lambda g: (-g,))


def square(a):
    a = as_tensor(a)
    return make_result(a.data * a.data, (a,), lambda g: (2.0 * a.data * g,))


def relu(a):
    a = as_tensor(a)
    mask = a.data > 0
    return make_result(np.where(mask, a.data, 0).astype(a.dtype), (a,), lambda g: (g * mask,))


def tanh(a):
    a = as_tensor(a)
    y = np.tanh(a.data)
    return make_result(y, (a,), lambda g: (g * (1.0 - y * y),))


def abs(a):  # noqa: A001  (mirrors numpy naming)
    a = as_tensor(a)
    sign = np.sign(a.data)
    return make_result(np.abs(a.data), (a,), lambda g: (g * sign,))


def clamp_min(a, lower):
    """max(a, lower); the adjoint passes where a >= lower"""
    a = as_tensor(a)
    keep = a.data >= lower
    return make_result(np.maximum(a.data, lower).astype(a.dtype), (a,), lambda g: (g * keep,))


# linear algebra ------------------------------------------------------------

def matmul(a, b):
    """
    Matrix product over the last two axes (leading axes broadcast)

    Raises:
        DimensionError: if an operand has fewer than 2 axes or the inner
            extents differ
    """
    a, b = _operands(a, b)
    if a.ndim < 2 or b.ndim < 2:
        raise DimensionError(f"matmul needs operands with >= 2 axes, got {a.shape} and {b.shape}")
    if a.shape[-1] != b.shape[-2]:
        raise DimensionError(f"matmul inner extents differ: {a.shape} x {b.shape}")

    def backward(g):
        grad_a = g @ np.swapaxes(b.data, -1, -2) if a.requires_grad else None
        grad_b = None
        if b.requires_grad:
            if b.ndim == 2:
                grad_b = a.data.reshape(-1, a.shape[-1]).T @ g.reshape(-1, g.shape[-1])
            else:
                grad_b = np.swapaxes(a.data, -1, -2) @ g
        return grad_a, grad_b

    return make_result(np.matmul(a.data, b.data), (a, b), backward)


# reductions ----------------------------------------------------------------

def sum(a, axis=None, keepdims=False):  # noqa: A001
    a = as_tensor(a)
    axes = _normalize_axes(axis, a.ndim)

    def backward(g):
        if not keepdims:
            g = np.expand_dims(g, axes) if axes else g
        return (np.broadcast_to(g, a.shape).copy(),)

    return make_result(np.sum(a.data, axis=axes, keepdims=keepdims), (a,), backward)


def mean(a, axis=None, keepdims=False):
    a = as_tensor(a)
    axes = _normalize_axes(axis, a.ndim)
    count = int(np.prod([a.shape[ax] for ax in axes])) if axes else 1
    return mul(sum(a, axis=axes, keepdims=keepdims), 1.0 / count)


def amin(a, axis=0):
    """Minimum along one axis; ties resolve to the lowest index, which alone receives the adjoint"""
    a = as_tensor(a)
    axis = axis % a.ndim
    index = np.expand_dims(np.argmin(a.data, axis=axis), axis)
    value = np.take_along_axis(a.data, index, axis=axis).squeeze(axis)

    def backward(g):
        grad = np.zeros_like(a.data)
        np.put_along_axis(grad, index, np.expand_dims(g, axis), axis=axis)
        return (grad,)

    return make_result(value, (a,), backward)


def norm_last(a, keepdims=False):
    """Euclidean norm over the last axis; zero vectors get a zero subgradient"""
    a = as_tensor(a)
    n = np.sqrt(np.sum(a.data * a.data, axis=-1, keepdims=True))
    positive = n > 0
    safe = np.where(positive, n, 1.0)

    def backward(g):
        g = g if keepdims else np.expand_dims(g, -1)
        return (g * a.data / safe * positive,)

    return make_result(n if keepdims else n[..., 0], (a,), backward)


# shape ---------------------------------------------------------------------

def reshape(a, shape):
    a = as_tensor(a)
    return make_result(a.data.reshape(shape), (a,), lambda g: (g.reshape(a.shape),))


def transpose(a, axes=None):
    a = as_tensor(a)
    axes = tuple(reversed(range(a.ndim))) if axes is None else tuple(ax % a.ndim for ax in axes)
    inverse = tuple(np.argsort(axes))
    return make_result(np.transpose(a.data, axes), (a,), lambda g: (np.transpose(g, inverse),))


def swapaxes(a, axis1, axis2):
    a = as_tensor(a)
    axes = list(range(a.ndim))
    axes[axis1], axes[axis2] = axes[axis2], axes[axis1]
    return transpose(a, axes)


def getitem(a, index):
    a = as_tensor(a)
    if isinstance(index, Tensor):
        index = index.data.astype(np.intp)

    def backward(g):
        grad = np.zeros_like(a.data)
        np.add.at(grad, index, g)
        return (grad,)

    return make_result(a.data[index], (a,), backward)


def concat(tensors, axis=-1):
    tensors = [as_tensor(t) for t in tensors]
    axis = axis % tensors[0].ndim
    bounds = np.cumsum([t.shape[axis] for t in tensors])[:-1]

    def backward(g):
        return tuple(np.split(g, bounds, axis=axis))

    return make_result(np.concatenate([t.data for t in tensors], axis=axis), tuple(tensors), backward)


def stack(tensors, axis=0):
    tensors = [as_tensor(t) for t in tensors]
    axis = axis % (tensors[0].ndim + 1)

    def backward(g):
        return tuple(np.take(g, i, axis=axis) for i in range(len(tensors)))

    return make_result(np.stack([t.data for t in tensors], axis=axis), tuple(tensors), backward)


def broadcast_to(a, shape):
    a = as_tensor(a)
    return make_result(np.broadcast_to(a.data, shape).copy(), (a,), lambda g: (g,))


# normalization -------------------------------------------------------------

def softmax(a, axis=-1):
    """Softmax with per-slice max subtraction (via scipy.special.softmax)"""
    a = as_tensor(a)
    y = special.softmax(a.data, axis=axis).astype(a.dtype)

    def backward(g):
        return (y * (g - np.sum(g * y, axis=axis, keepdims=True)),)

    return make_result(y, (a,), backward)


def softmax_rows(a):
    """Row-wise softmax of a matrix: each row is non-negative and sums to 1"""
    a = as_tensor(a)
    if a.ndim < 1:
        raise DimensionError("softmax_rows needs at least one axis")
    return softmax(a, axis=-1)


def layer_norm(a, gain, bias, eps=LAYER_NORM_EPS):
    """
    Normalize each vector along the last axis, then apply gain and bias

    Args:
        a: (..., d) input
        gain: (d,) scale
        bias: (d,) shift
        eps: variance floor

    Returns:
        (..., d) tensor with zero mean / unit variance before the affine step
    """
    a, gain, bias = as_tensor(a), as_tensor(gain), as_tensor(bias)
    d = a.shape[-1]
    if gain.shape != (d,) or bias.shape != (d,):
        raise DimensionError(f"layer_norm affine shapes {gain.shape}/{bias.shape} do not match d={d}")
    mu = a.data.mean(axis=-1, keepdims=True)
    centered = a.data - mu
    var = np.mean(centered * centered, axis=-1, keepdims=True)
    inv_std = 1.0 / np.sqrt(var + eps)
    xhat = centered * inv_std
    out = xhat * gain.data + bias.data

    def backward(g):
        grad_xhat = g * gain.data
        grad_a = inv_std * (grad_xhat
                            - grad_xhat.mean(axis=-1, keepdims=True)
                            - xhat * np.mean(grad_xhat * xhat, axis=-1, keepdims=True))
        grad_gain = (g * xhat).reshape(-1, d).sum(axis=0)
        grad_bias = g.reshape(-1, d).sum(axis=0)
        return grad_a, grad_gain, grad_bias

    return make_result(out.astype(a.dtype), (a, gain, bias), backward)
