"""Minimal reverse-mode autodiff over numpy arrays.

Just enough machinery for the models in this package: broadcasting
elementwise ops, (batched) matmul, activations, softmax/log-softmax,
reductions, reshapes, concatenation, slicing, and embedding lookup.
Graphs are only recorded when an input requires gradients, so inference
runs without bookkeeping overhead. Gradients accumulate in float arrays
of the same dtype as the forward data.
"""

from __future__ import annotations

import numpy as np


def _unbroadcast(grad: np.ndarray, shape: tuple) -> np.ndarray:
    """Sum grad over axes that were broadcast to reach its shape."""
    if grad.shape == shape:
        return grad
    while grad.ndim > len(shape):
        grad = grad.sum(axis=0)
    for axis, size in enumerate(shape):
        if size == 1 and grad.shape[axis] != 1:
            grad = grad.sum(axis=axis, keepdims=True)
    return grad


class Tensor:
    __slots__ = ("data", "grad", "requires_grad", "_parents", "_backward")

    def __init__(self, data, requires_grad: bool = False, parents=(), backward=None):
        self.data = data if isinstance(data, np.ndarray) else np.asarray(data, dtype=np.float64)
        self.grad = None
        self.requires_grad = requires_grad
        self._parents = parents
        self._backward = backward

    @property
    def shape(self):
        return self.data.shape

    @property
    def dtype(self):
        return self.data.dtype

    def __repr__(self):
        return f"Tensor(shape={self.data.shape}, dtype={self.data.dtype}, grad={self.requires_grad})"

    def _accumulate(self, grad: np.ndarray) -> None:
        if self.grad is None:
            self.grad = np.zeros_like(self.data)
        self.grad += grad

    def backward(self) -> None:
        """Backpropagate from a scalar output through the recorded graph."""
        if self.data.size != 1:
            raise ValueError("backward() requires a scalar tensor")
        topo: list[Tensor] = []
        visited: set[int] = set()
        stack: list[tuple[Tensor, bool]] = [(self, False)]
        while stack:
            node, expanded = stack.pop()
            if expanded:
                topo.append(node)
                continue
            if id(node) in visited:
                continue
            visited.add(id(node))
            stack.append((node, True))
            for parent in node._parents:
                if id(parent) not in visited and parent.requires_grad:
                    stack.append((parent, False))
        self.grad = np.ones_like(self.data)
        for node in reversed(topo):
            if node._backward is not None and node.grad is not None:
                node._backward(node.grad)

    # -- elementwise -------------------------------------------------

    def _coerce(self, other):
        if isinstance(other, Tensor):
            return other
        return Tensor(np.asarray(other, dtype=self.data.dtype))

    def __add__(self, other):
        other = self._coerce(other)
        out_data = self.data + other.data
        needs = self.requires_grad or other.requires_grad
        if not needs:
            return Tensor(out_data)

        def backward(g):
            if self.requires_grad:
                self._accumulate(_unbroadcast(g, self.data.shape))
            if other.requires_grad:
                other._accumulate(_unbroadcast(g, other.data.shape))

        return Tensor(out_data, True, (self, other), backward)

    __radd__ = __add__

    def __neg__(self):
        return self * -1.0

    def __sub__(self, other):
        return self + (-self._coerce(other))

    def __rsub__(self, other):
        return self._coerce(other) + (-self)

    def __mul__(self, other):
        other = self._coerce(other)
        out_data = self.data * other.data
        needs = self.requires_grad or other.requires_grad
        if not needs:
            return Tensor(out_data)

        def backward(g):
            if self.requires_grad:
                self._accumulate(_unbroadcast(g * other.data, self.data.shape))
            if other.requires_grad:
                other._accumulate(_unbroadcast(g * self.data, other.data.shape))

        return Tensor(out_data, True, (self, other), backward)

    __rmul__ = __mul__

    def __truediv__(self, scalar):
        if isinstance(scalar, Tensor):
            raise TypeError("tensor division is not supported; use pow(-1) and mul")
        return self * (1.0 / scalar)

    def pow(self, exponent: float) -> "Tensor":
        out_data = self.data**exponent
        if not self.requires_grad:
            return Tensor(out_data)

        def backward(g):
            self._accumulate(g * exponent * self.data ** (exponent - 1))

        return Tensor(out_data, True, (self,), backward)

    # -- matmul ------------------------------------------------------

    def matmul(self, other: "Tensor") -> "Tensor":
        out_data = np.matmul(self.data, other.data)
        needs = self.requires_grad or other.requires_grad
        if not needs:
            return Tensor(out_data)

        def backward(g):
            if self.requires_grad:
                ga = np.matmul(g, other.data.swapaxes(-1, -2))
                self._accumulate(_unbroadcast(ga, self.data.shape))
            if other.requires_grad:
                gb = np.matmul(self.data.swapaxes(-1, -2), g)
                other._accumulate(_unbroadcast(gb, other.data.shape))

        return Tensor(out_data, True, (self, other), backward)

    __matmul__ = matmul

    # -- activations -------------------------------------------------

    def tanh(self) -> "Tensor":
        out_data = np.tanh(self.data)
        if not self.requires_grad:
            return Tensor(out_data)

        def backward(g):
            self._accumulate(g * (1.0 - out_data * out_data))

        return Tensor(out_data, True, (self,), backward)

    def sigmoid(self) -> "Tensor":
        out_data = 1.0 / (1.0 + np.exp(-self.data))
        if not self.requires_grad:
            return Tensor(out_data)

        def backward(g):
            self._accumulate(g * out_data * (1.0 - out_data))

        return Tensor(out_data, True, (self,), backward)

    def relu(self) -> "Tensor":
        out_data = np.maximum(self.data, 0.0)
        if not self.requires_grad:
            return Tensor(out_data)

        def backward(g):
            self._accumulate(g * (self.data > 0))

        return Tensor(out_data, True, (self,), backward)

    # -- softmax family ----------------------------------------------

    def softmax(self, axis: int = -1) -> "Tensor":
        shifted = self.data - self.data.max(axis=axis, keepdims=True)
        exp = np.exp(shifted)
        out_data = exp / exp.sum(axis=axis, keepdims=True)
        if not self.requires_grad:
            return Tensor(out_data)

        def backward(g):
            inner = (g * out_data).sum(axis=axis, keepdims=True)
            self._accumulate(out_data * (g - inner))

        return Tensor(out_data, True, (self,), backward)

    def log_softmax(self, axis: int = -1) -> "Tensor":
        shifted = self.data - self.data.max(axis=axis, keepdims=True)
        log_z = np.log(np.exp(shifted).sum(axis=axis, keepdims=True))
        out_data = shifted - log_z
        if not self.requires_grad:
            return Tensor(out_data)

        def backward(g):
            self._accumulate(g - np.exp(out_data) * g.sum(axis=axis, keepdims=True))

        return Tensor(out_data, True, (self,), backward)

    # -- reductions and shape ops -------------------------------------

    def sum(self, axis=None, keepdims: bool = False) -> "Tensor":
        out_data = self.data.sum(axis=axis, keepdims=keepdims)
        if not self.requires_grad:
            return Tensor(out_data)

        def backward(g):
            if axis is None:
                self._accumulate(np.broadcast_to(g, self.data.shape).copy())
                return
            if not keepdims:
                g = np.expand_dims(g, axis)
            self._accumulate(np.broadcast_to(g, self.data.shape).copy())

        return Tensor(out_data, True, (self,), backward)

    def mean(self, axis=None, keepdims: bool = False) -> "Tensor":
        if axis is None:
            count = self.data.size
        else:
            count = self.data.shape[axis]
        return self.sum(axis=axis, keepdims=keepdims) * (1.0 / count)

    def reshape(self, *shape) -> "Tensor":
        if len(shape) == 1 and isinstance(shape[0], (tuple, list)):
            shape = tuple(shape[0])
        out_data = self.data.reshape(shape)
        if not self.requires_grad:
            return Tensor(out_data)

        def backward(g):
            self._accumulate(g.reshape(self.data.shape))

        return Tensor(out_data, True, (self,), backward)

    def transpose(self, axes) -> "Tensor":
        out_data = self.data.transpose(axes)
        if not self.requires_grad:
            return Tensor(out_data)
        inverse = np.argsort(axes)

        def backward(g):
            self._accumulate(g.transpose(inverse))

        return Tensor(out_data, True, (self,), backward)

    def __getitem__(self, key) -> "Tensor":
        out_data = self.data[key]
        if not self.requires_grad:
            return Tensor(out_data)

        def backward(g):
            full = np.zeros_like(self.data)
            full[key] = g
            self._accumulate(full)

        return Tensor(out_data, True, (self,), backward)


def concat(tensors, axis: int = 0) -> Tensor:
    out_data = np.concatenate([t.data for t in tensors], axis=axis)
    needs = any(t.requires_grad for t in tensors)
    if not needs:
        return Tensor(out_data)
    sizes = [t.data.shape[axis] for t in tensors]
    offsets = np.cumsum([0] + sizes)

    def backward(g):
        for t, start, stop in zip(tensors, offsets[:-1], offsets[1:]):
            if t.requires_grad:
                index = [slice(None)] * g.ndim
                index[axis] = slice(start, stop)
                t._accumulate(g[tuple(index)])

    return Tensor(out_data, True, tuple(tensors), backward)


def stack(tensors, axis: int = 0) -> Tensor:
    expanded = []
    for t in tensors:
        shape = list(t.data.shape)
        shape.insert(axis if axis >= 0 else axis + t.data.ndim + 1, 1)
        expanded.append(t.reshape(shape))
    return concat(expanded, axis=axis)


def embedding(table: Tensor, indices: np.ndarray) -> Tensor:
    """Row lookup: output shape is indices.shape + (embedding_dim,)."""
    indices = np.asarray(indices)
    out_data = table.data[indices]
    if not table.requires_grad:
        return Tensor(out_data)

    def backward(g):
        if table.grad is None:
            table.grad = np.zeros_like(table.data)
        np.add.at(table.grad, indices.reshape(-1), g.reshape(-1, table.data.shape[1]))

    return Tensor(out_data, True, (table,), backward)


def gather_last(x: Tensor, indices: np.ndarray) -> Tensor:
    """Pick one entry along the last axis; indices.shape == x.shape[:-1]."""
    indices = np.asarray(indices)
    out_data = np.take_along_axis(x.data, indices[..., None], axis=-1)[..., 0]
    if not x.requires_grad:
        return Tensor(out_data)
    last = x.data.shape[-1]
    rows = np.arange(indices.size)

    def backward(g):
        full = np.zeros_like(x.data).reshape(-1)
        np.add.at(full, rows * last + indices.reshape(-1), g.reshape(-1))
        x._accumulate(full.reshape(x.data.shape))

    return Tensor(out_data, True, (x,), backward)


def constant(array, dtype=None) -> Tensor:
    """A non-differentiable tensor (masks, scales, dropout keeps)."""
    return Tensor(np.asarray(array, dtype=dtype))


def dropout(x: Tensor, p: float, rng: np.random.Generator, training: bool) -> Tensor:
    """Inverted dropout; identity when not training or p == 0."""
    if not training or p <= 0.0:
        return x
    keep = (rng.random(x.data.shape) >= p).astype(x.data.dtype) / (1.0 - p)
    return x * constant(keep)
