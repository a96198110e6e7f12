"""
Tape-based reverse-mode differentiation over numpy arrays

A Tape records every primitive evaluated while it is active (per thread).
``backprop`` replays the records in exact reverse order, accumulating
adjoints. Outside an active tape, operations run as plain numpy and build
no graph, which is what inference and finite differences use.
"""
import threading

import numpy as np

from ..utils.errors import ContractError

_local = threading.local()


def _tape_stack():
    stack = getattr(_local, "stack", None)
    if stack is None:
        stack = []
        _local.stack = stack
    return stack


def active_tape():
    """Return the innermost tape active on this thread, or None"""
    stack = _tape_stack()
    return stack[-1] if stack else None


class Tape:
    """
    Ordered record of primitive operations for one forward pass

    Usage:
        with Tape() as tape:
            loss = model.loss(scene)
        grads = backprop(tape, loss, params)
    """

    def __init__(self):
        self.records = []

    def record(self, out, parents, backward):
        self.records.append((out, parents, backward))

    def __len__(self):
        return len(self.records)

    def __enter__(self):
        _tape_stack().append(self)
        return self

    def __exit__(self, exc_type, exc, tb):
        stack = _tape_stack()
        if not stack or stack[-1] is not self:
            raise ContractError("Tape contexts must be exited in LIFO order")
        stack.pop()
        return False


class Tensor:
    """
    Dense array node: numpy data, a gradient slot and a requires_grad flag
    """

    __array_priority__ = 1000

    def __init__(self, data, requires_grad=False, name=None, dtype=None):
        array = np.asarray(data, dtype=dtype)
        if not np.issubdtype(array.dtype, np.floating):
            array = array.astype(np.float64)
        self.data = array
        self.requires_grad = bool(requires_grad)
        self.grad = None
        self.name = name

    @property
    def shape(self):
        return self.data.shape

    @property
    def ndim(self):
        return self.data.ndim

    @property
    def size(self):
        return self.data.size

    @property
    def dtype(self):
        return self.data.dtype

    def numpy(self):
        return self.data

    def item(self):
        return float(self.data.reshape(-1)[0]) if self.data.size == 1 else self.data.item()

    def __repr__(self):
        label = f", name={self.name!r}" if self.name else ""
        return f"Tensor(shape={self.shape}, dtype={self.dtype}{label})"

    def __len__(self):
        return self.shape[0]

    # arithmetic -----------------------------------------------------------
    def __add__(self, other):
        return ops.add(self, other)

    def __radd__(self, other):
        return ops.add(other, self)

    def __sub__(self, other):
        return ops.sub(self, other)

    def __rsub__(self, other):
        return ops.sub(other, self)

    def __mul__(self, other):
        return ops.mul(self, other)

    def __rmul__(self, other):
        return ops.mul(other, self)

    def __truediv__(self, other):
        return ops.div(self, other)

    def __rtruediv__(self, other):
        return ops.div(other, self)

    def __neg__(self):
        return ops.neg(self)

    def __matmul__(self, other):
        return ops.matmul(self, other)

    def __rmatmul__(self, other):
        return ops.matmul(other, self)

    def __getitem__(self, index):
        return ops.getitem(self, index)

    # shape / reductions ---------------------------------------------------
    def sum(self, axis=None, keepdims=False):
        return ops.sum(self, axis=axis, keepdims=keepdims)

    def mean(self, axis=None, keepdims=False):
        return ops.mean(self, axis=axis, keepdims=keepdims)

    def reshape(self, *shape):
        if len(shape) == 1 and isinstance(shape[0], (tuple, list)):
            shape = tuple(shape[0])
        return ops.reshape(self, shape)

    def transpose(self, *axes):
        if len(axes) == 1 and isinstance(axes[0], (tuple, list)):
            axes = tuple(axes[0])
        return ops.transpose(self, axes or None)

    @property
    def T(self):
        return ops.transpose(self, None)


def as_tensor(value, dtype=None):
    """Wrap constants as non-differentiable tensors; tensors pass through"""
    if isinstance(value, Tensor):
        return value
    return Tensor(value, requires_grad=False, dtype=dtype)


def make_result(data, parents, backward):
    """
    Create the output node of a primitive and record it on the active tape

    Args:
        data: forward value (numpy array)
        parents: tuple of input Tensors
        backward: callable mapping the output adjoint to one adjoint per
            parent (None where a parent needs no gradient)

    Returns:
        Output Tensor, differentiable iff a tape is active and any parent is
    """
    tape = active_tape()
    requires = tape is not None and any(p.requires_grad for p in parents)
    out = Tensor(data, requires_grad=requires)
    if requires:
        tape.record(out, tuple(parents), backward)
    return out


def unbroadcast(grad, shape):
    """Sum a broadcast adjoint back down to the operand's shape"""
    if grad.shape == tuple(shape):
        return grad
    while grad.ndim > len(shape):
        grad = grad.sum(axis=0)
    for axis, extent in enumerate(shape):
        if extent == 1 and grad.shape[axis] != 1:
            grad = grad.sum(axis=axis, keepdims=True)
    return grad.reshape(shape)


class CustomGradRegion:
    """
    Region whose forward value is kept but whose adjoint is user supplied

    Args:
        forward: f(*arrays) -> array, evaluated on raw input data
        backward: b(grad_out, *arrays) -> tuple of adjoints, one per input,
            substituted for the true adjoint of the region
    """

    def __init__(self, forward, backward, name=None):
        self.forward = forward
        self.backward = backward
        self.name = name

    def __call__(self, *inputs):
        tensors = tuple(as_tensor(x) for x in inputs)
        arrays = tuple(t.data for t in tensors)
        data = np.asarray(self.forward(*arrays))

        def _backward(grad):
            grads = self.backward(grad, *arrays)
            if not isinstance(grads, (tuple, list)):
                grads = (grads,)
            if len(grads) != len(tensors):
                raise ContractError(
                    f"custom backward of {self.name or 'region'} returned {len(grads)} "
                    f"adjoints for {len(tensors)} inputs")
            return grads

        return make_result(data, tensors, _backward)


def backprop(tape, loss, params=None):
    """
    Reverse sweep over a tape

    Every reached tensor gets its ``.grad`` filled. When a ParameterStore is
    given, a dict name -> adjoint is returned with exact zeros for parameters
    the loss does not reach.

    Raises:
        ContractError: if loss is not a scalar
    """
    loss = as_tensor(loss)
    if loss.size != 1:
        raise ContractError(f"backprop needs a scalar loss, got shape {loss.shape}")

    adjoints = {}
    nodes = {}
    if loss.requires_grad:
        adjoints[id(loss)] = np.ones_like(loss.data)
        nodes[id(loss)] = loss

    for out, parents, backward in reversed(tape.records):
        grad = adjoints.get(id(out))
        if grad is None:
            continue
        out.grad = grad
        parent_grads = backward(grad)
        for parent, parent_grad in zip(parents, parent_grads):
            if parent_grad is None or not parent.requires_grad:
                continue
            parent_grad = unbroadcast(np.asarray(parent_grad, dtype=parent.dtype), parent.shape)
            key = id(parent)
            if key in adjoints:
                adjoints[key] = adjoints[key] + parent_grad
            else:
                adjoints[key] = parent_grad
                nodes[key] = parent

    for key, tensor in nodes.items():
        tensor.grad = adjoints[key]

    if params is None:
        return None
    return {name: (adjoints[id(p)] if id(p) in adjoints else np.zeros_like(p.data))
            for name, p in params.items()}


def stop_gradient(tensor):
    """Same value, no adjoint"""
    return Tensor(as_tensor(tensor).data, requires_grad=False)


from . import ops  # noqa: E402  (ops depends on Tensor being defined)
