"""Small reverse-mode autodiff engine over float64 numpy arrays.

Only the primitives the pipeline needs: affine maps, elementwise
nonlinearities, softmax / log-softmax / sparsemax, reductions and a few
arithmetic ops. Gradients accumulate on leaf Tensors created with
``requires_grad=True``.
"""

from __future__ import annotations

import numpy as np


class NonFiniteError(ValueError):
    """Raised when a NaN/Inf shows up in a value or gradient."""

    def __init__(self, where: str):
        super().__init__(f"non-finite value detected in {where}")
        self.where = where


class Tensor:
    __slots__ = ("value", "grad", "requires_grad", "_parents", "_backward", "name")

    def __init__(self, value, requires_grad=False, parents=(), backward=None, name=None):
        self.value = np.asarray(value, dtype=np.float64)
        self.grad = None
        self.requires_grad = requires_grad or any(p.requires_grad for p in parents)
        self._parents = parents
        self._backward = backward
        self.name = name

    @property
    def shape(self):
        return self.value.shape

    def check_finite(self, where="tensor"):
        if not np.all(np.isfinite(self.value)):
            raise NonFiniteError(where if self.name is None else f"{where} ({self.name})")
        return self

    # ---- arithmetic -------------------------------------------------

    def __add__(self, other):
        other = _wrap(other)
        out = Tensor(self.value + other.value, parents=(self, other))
        def backward(g):
            return _unbroadcast(g, self.shape), _unbroadcast(g, other.shape)
        out._backward = backward
        return out

    def __sub__(self, other):
        other = _wrap(other)
        out = Tensor(self.value - other.value, parents=(self, other))
        def backward(g):
            return _unbroadcast(g, self.shape), _unbroadcast(-g, other.shape)
        out._backward = backward
        return out

    def __mul__(self, other):
        other = _wrap(other)
        out = Tensor(self.value * other.value, parents=(self, other))
        a, b = self, other
        def backward(g):
            return _unbroadcast(g * b.value, a.shape), _unbroadcast(g * a.value, b.shape)
        out._backward = backward
        return out

    def __neg__(self):
        out = Tensor(-self.value, parents=(self,))
        out._backward = lambda g: (-g,)
        return out

    __radd__ = __add__
    __rmul__ = __mul__

    def __rsub__(self, other):
        return _wrap(other) - self

    def matmul(self, other):
        other = _wrap(other)
        out = Tensor(self.value @ other.value, parents=(self, other))
        a, b = self, other
        def backward(g):
            ga = g @ b.value.T
            gb = a.value.T @ g
            return ga, gb
        out._backward = backward
        return out

    def __matmul__(self, other):
        return self.matmul(other)

    def square(self):
        out = Tensor(self.value ** 2, parents=(self,))
        out._backward = lambda g: (2.0 * g * self.value,)
        return out

    def exp(self):
        out = Tensor(np.exp(self.value), parents=(self,))
        out._backward = lambda g: (g * out.value,)
        return out

    def log(self):
        out = Tensor(np.log(self.value), parents=(self,))
        out._backward = lambda g: (g / self.value,)
        return out

    # ---- nonlinearities ---------------------------------------------

    def relu(self):
        mask = self.value > 0
        out = Tensor(np.where(mask, self.value, 0.0), parents=(self,))
        out._backward = lambda g: (g * mask,)
        return out

    def tanh(self):
        t = np.tanh(self.value)
        out = Tensor(t, parents=(self,))
        out._backward = lambda g: (g * (1.0 - t * t),)
        return out

    def softmax(self):
        """Row-wise softmax with max-subtraction (last axis)."""
        p = softmax_np(self.value)
        out = Tensor(p, parents=(self,))
        def backward(g):
            dot = np.sum(g * p, axis=-1, keepdims=True)
            return (p * (g - dot),)
        out._backward = backward
        return out

    def log_softmax(self):
        v = self.value
        m = np.max(v, axis=-1, keepdims=True)
        shifted = v - m
        lse = np.log(np.sum(np.exp(shifted), axis=-1, keepdims=True))
        ls = shifted - lse
        p = np.exp(ls)
        out = Tensor(ls, parents=(self,))
        def backward(g):
            return (g - p * np.sum(g, axis=-1, keepdims=True),)
        out._backward = backward
        return out

    def sparsemax(self):
        """Row-wise Euclidean projection onto the probability simplex."""
        p = sparsemax_np(self.value)
        support = p > 0
        out = Tensor(p, parents=(self,))
        def backward(g):
            ns = np.sum(support, axis=-1, keepdims=True)
            mean_on_support = np.sum(g * support, axis=-1, keepdims=True) / ns
            return (support * (g - mean_on_support),)
        out._backward = backward
        return out

    # ---- reductions / reshaping -------------------------------------

    def sum(self, axis=None, keepdims=False):
        out = Tensor(np.sum(self.value, axis=axis, keepdims=keepdims), parents=(self,))
        shape = self.shape
        def backward(g):
            g = np.asarray(g)
            if axis is not None and not keepdims:
                g = np.expand_dims(g, axis)
            return (np.broadcast_to(g, shape).copy(),)
        out._backward = backward
        return out

    def mean(self, axis=None, keepdims=False):
        n = self.value.size if axis is None else self.value.shape[axis]
        return self.sum(axis=axis, keepdims=keepdims) * (1.0 / n)

    def gather_cols(self, idx):
        """Pick one column per row: out[i] = self[i, idx[i]]."""
        idx = np.asarray(idx, dtype=np.int64)
        rows = np.arange(self.value.shape[0])
        out = Tensor(self.value[rows, idx], parents=(self,))
        def backward(g):
            full = np.zeros_like(self.value)
            np.add.at(full, (rows, idx), g)
            return (full,)
        out._backward = backward
        return out

    def concat(self, other, axis=-1):
        other = _wrap(other)
        out = Tensor(np.concatenate([self.value, other.value], axis=axis),
                     parents=(self, other))
        n = self.value.shape[axis]
        def backward(g):
            ga, gb = np.split(g, [n], axis=axis)
            return ga, gb
        out._backward = backward
        return out

    # ---- backward pass ----------------------------------------------

    def backward(self):
        if self.value.size != 1:
            raise ValueError("backward() requires a scalar loss")
        topo: list[Tensor] = []
        seen = set()
        def visit(t):
            if id(t) in seen:
                return
            seen.add(id(t))
            for p in t._parents:
                visit(p)
            topo.append(t)
        visit(self)

        grads = {id(self): np.ones_like(self.value)}
        for t in reversed(topo):
            g = grads.pop(id(t), None)
            if g is None:
                continue
            if t._backward is None:
                if t.requires_grad:
                    t.grad = g if t.grad is None else t.grad + g
                continue
            for p, pg in zip(t._parents, t._backward(g)):
                if not p.requires_grad:
                    continue
                if id(p) in grads:
                    grads[id(p)] = grads[id(p)] + pg
                else:
                    grads[id(p)] = pg


def _wrap(x):
    return x if isinstance(x, Tensor) else Tensor(x)


def _unbroadcast(g, shape):
    """Sum gradient g down to the given (possibly broadcast) shape."""
    g = np.asarray(g, dtype=np.float64)
    while g.ndim > len(shape):
        g = g.sum(axis=0)
    for i, s in enumerate(shape):
        if s == 1 and g.shape[i] != 1:
            g = g.sum(axis=i, keepdims=True)
    return g.reshape(shape)


# ---- plain numpy versions (shared with inference paths) -------------

def softmax_np(v):
    v = np.asarray(v, dtype=np.float64)
    m = np.max(v, axis=-1, keepdims=True)
    e = np.exp(v - m)
    return e / np.sum(e, axis=-1, keepdims=True)


def sparsemax_np(v):
    """Sorted-threshold simplex projection (works on the last axis)."""
    v = np.asarray(v, dtype=np.float64)
    orig_shape = v.shape
    v2 = v.reshape(-1, orig_shape[-1])
    srt = -np.sort(-v2, axis=-1)
    k = np.arange(1, orig_shape[-1] + 1)
    cumsum = np.cumsum(srt, axis=-1)
    cond = 1.0 + k * srt > cumsum
    k_max = np.sum(cond, axis=-1)
    tau = (cumsum[np.arange(v2.shape[0]), k_max - 1] - 1.0) / k_max
    out = np.maximum(v2 - tau[:, None], 0.0)
    return out.reshape(orig_shape)
