"""Reverse-mode autodiff over numpy arrays.

Every op builds a node holding its parents and a backward closure; calling
`backward()` on a scalar output walks the graph once in reverse topological
order. Parents are kept as ordered tuples and the traversal is iterative,
so gradient accumulation order is fixed and runs are bit-reproducible.

All math is float64. By default every op output is checked for NaN/Inf and
a `NumericFault` is raised at the op that produced it; `set_finite_checks`
can switch that off for hot loops.
"""

import numpy as np

from ..errors import NumericFault, ValidationError

_FINITE_CHECKS = [True]


def set_finite_checks(enabled: bool) -> None:
    _FINITE_CHECKS[0] = bool(enabled)


def _unbroadcast(grad: np.ndarray, shape: tuple) -> np.ndarray:
    """Reduce a gradient back to `shape` after numpy broadcasting."""
    extra = grad.ndim - len(shape)
    if extra > 0:
        grad = grad.sum(axis=tuple(range(extra)))
    axes = tuple(i for i, s in enumerate(shape) if s == 1 and grad.shape[i] != 1)
    if axes:
        grad = grad.sum(axis=axes, keepdims=True)
    return grad.reshape(shape)


class Tensor:
    __slots__ = ("data", "grad", "requires_grad", "_parents", "_backward", "op")

    def __init__(self, data, requires_grad=False, _parents=(), _op="leaf"):
        self.data = np.asarray(data, dtype=np.float64)
        if _FINITE_CHECKS[0] and not np.all(np.isfinite(self.data)):
            raise NumericFault(f"non-finite values produced by op {_op!r}")
        self.requires_grad = bool(requires_grad) or any(p.requires_grad for p in _parents)
        self.grad = np.zeros_like(self.data) if (self.requires_grad and not _parents) else None
        self._parents = _parents
        self._backward = None
        self.op = _op

    # -- graph ----------------------------------------------------------

    @property
    def shape(self):
        return self.data.shape

    @property
    def size(self):
        return self.data.size

    def item(self) -> float:
        if self.data.size != 1:
            raise ValidationError(f"item() on tensor of shape {self.data.shape}")
        return float(self.data.reshape(()))

    def zero_grad(self) -> None:
        if self.requires_grad:
            self.grad = np.zeros_like(self.data)

    def _accum(self, g: np.ndarray) -> None:
        if self.grad is None:
            self.grad = np.zeros_like(self.data)
        self.grad += g

    def backward(self, grad=None) -> None:
        if grad is None:
            if self.data.size != 1:
                raise ValidationError("backward() without a cotangent needs a scalar output")
            grad = np.ones_like(self.data)
        else:
            grad = np.asarray(grad, dtype=np.float64)
            if grad.shape != self.data.shape:
                raise ValidationError("cotangent shape mismatch")

        # iterative topological sort, deterministic via ordered parents
        order = []
        seen = set()
        stack = [(self, False)]
        while stack:
            node, expanded = stack.pop()
            if expanded:
                order.append(node)
                continue
            if id(node) in seen:
                continue
            seen.add(id(node))
            stack.append((node, True))
            for p in node._parents:
                if id(p) not in seen:
                    stack.append((p, False))

        self._accum(grad)
        for node in reversed(order):
            if node._backward is not None and node.requires_grad:
                node._backward(node.grad)

    # -- arithmetic -----------------------------------------------------

    def _lift(self, other) -> "Tensor":
        return other if isinstance(other, Tensor) else Tensor(np.asarray(other, dtype=np.float64))

    def __add__(self, other):
        other = self._lift(other)
        out = Tensor(self.data + other.data, _parents=(self, other), _op="add")

        def back(g):
            if self.requires_grad:
                self._accum(_unbroadcast(g, self.data.shape))
            if other.requires_grad:
                other._accum(_unbroadcast(g, other.data.shape))

        out._backward = back
        return out

    __radd__ = __add__

    def __mul__(self, other):
        other = self._lift(other)
        out = Tensor(self.data * other.data, _parents=(self, other), _op="mul")

        def back(g):
            if self.requires_grad:
                self._accum(_unbroadcast(g * other.data, self.data.shape))
            if other.requires_grad:
                other._accum(_unbroadcast(g * self.data, other.data.shape))

        out._backward = back
        return out

    __rmul__ = __mul__

    def __neg__(self):
        return self * -1.0

    def __sub__(self, other):
        return self + (-self._lift(other))

    def __rsub__(self, other):
        return self._lift(other) + (-self)

    def __truediv__(self, other):
        other = self._lift(other)
        out = Tensor(self.data / other.data, _parents=(self, other), _op="div")

        def back(g):
            if self.requires_grad:
                self._accum(_unbroadcast(g / other.data, self.data.shape))
            if other.requires_grad:
                other._accum(_unbroadcast(-g * self.data / (other.data * other.data), other.data.shape))

        out._backward = back
        return out

    def __pow__(self, exponent):
        if not isinstance(exponent, (int, float)):
            raise ValidationError("only scalar exponents are supported")
        out = Tensor(self.data ** exponent, _parents=(self,), _op="pow")

        def back(g):
            if self.requires_grad:
                self._accum(g * exponent * self.data ** (exponent - 1))

        out._backward = back
        return out

    def __matmul__(self, other):
        other = self._lift(other)
        a, b = self.data, other.data
        if a.ndim < 2 or b.ndim < 2:
            raise ValidationError("matmul needs tensors with ndim >= 2")
        if a.shape[-1] != b.shape[-2]:
            raise ValidationError(f"matmul inner dims disagree: {a.shape} @ {b.shape}")
        out = Tensor(a @ b, _parents=(self, other), _op="matmul")

        def back(g):
            if self.requires_grad:
                self._accum(_unbroadcast(g @ np.swapaxes(b, -1, -2), a.shape))
            if other.requires_grad:
                other._accum(_unbroadcast(np.swapaxes(a, -1, -2) @ g, b.shape))

        out._backward = back
        return out

    # -- shape ----------------------------------------------------------

    def reshape(self, *shape):
        if len(shape) == 1 and isinstance(shape[0], (tuple, list)):
            shape = tuple(shape[0])
        out = Tensor(self.data.reshape(shape), _parents=(self,), _op="reshape")

        def back(g):
            if self.requires_grad:
                self._accum(g.reshape(self.data.shape))

        out._backward = back
        return out

    def transpose(self, axes):
        axes = tuple(axes)
        inverse = tuple(np.argsort(axes))
        out = Tensor(self.data.transpose(axes), _parents=(self,), _op="transpose")

        def back(g):
            if self.requires_grad:
                self._accum(g.transpose(inverse))

        out._backward = back
        return out

    def __getitem__(self, key):
        out = Tensor(self.data[key], _parents=(self,), _op="slice")

        def back(g):
            if self.requires_grad:
                full = np.zeros_like(self.data)
                np.add.at(full, key, g)
                self._accum(full)

        out._backward = back
        return out

    # -- reductions ------------------------------------------------------

    def sum(self, axis=None, keepdims=False):
        out = Tensor(self.data.sum(axis=axis, keepdims=keepdims), _parents=(self,), _op="sum")
        shape = self.data.shape

        def back(g):
            if not self.requires_grad:
                return
            if axis is None:
                self._accum(np.broadcast_to(g, shape).copy() if np.ndim(g) else np.full(shape, g))
            else:
                axes = (axis,) if isinstance(axis, int) else tuple(axis)
                gg = g
                if not keepdims:
                    for ax in sorted(a % len(shape) for a in axes):
                        gg = np.expand_dims(gg, ax)
                self._accum(np.broadcast_to(gg, shape).copy())

        out._backward = back
        return out

    def mean(self, axis=None, keepdims=False):
        if axis is None:
            count = self.data.size
        else:
            axes = (axis,) if isinstance(axis, int) else tuple(axis)
            count = int(np.prod([self.data.shape[a] for a in axes]))
        return self.sum(axis=axis, keepdims=keepdims) * (1.0 / count)

    # -- elementwise nonlinear -------------------------------------------

    def relu(self):
        out = Tensor(np.maximum(self.data, 0.0), _parents=(self,), _op="relu")

        def back(g):
            if self.requires_grad:
                self._accum(g * (self.data > 0.0))

        out._backward = back
        return out

    def sigmoid(self):
        x = self.data
        y = np.where(x >= 0, 1.0 / (1.0 + np.exp(-np.abs(x))), np.exp(-np.abs(x)) / (1.0 + np.exp(-np.abs(x))))
        out = Tensor(y, _parents=(self,), _op="sigmoid")

        def back(g):
            if self.requires_grad:
                self._accum(g * y * (1.0 - y))

        out._backward = back
        return out

    def tanh(self):
        y = np.tanh(self.data)
        out = Tensor(y, _parents=(self,), _op="tanh")

        def back(g):
            if self.requires_grad:
                self._accum(g * (1.0 - y * y))

        out._backward = back
        return out

    def exp(self):
        y = np.exp(self.data)
        out = Tensor(y, _parents=(self,), _op="exp")

        def back(g):
            if self.requires_grad:
                self._accum(g * y)

        out._backward = back
        return out

    def sqrt(self):
        y = np.sqrt(self.data)
        out = Tensor(y, _parents=(self,), _op="sqrt")

        def back(g):
            if self.requires_grad:
                self._accum(g * 0.5 / y)

        out._backward = back
        return out


def concat(tensors, axis=0):
    tensors = list(tensors)
    out = Tensor(np.concatenate([t.data for t in tensors], axis=axis), _parents=tuple(tensors), _op="concat")
    sizes = [t.data.shape[axis] for t in tensors]
    offsets = np.cumsum([0] + sizes)

    def back(g):
        for t, lo, hi in zip(tensors, offsets[:-1], offsets[1:]):
            if t.requires_grad:
                index = [slice(None)] * g.ndim
                index[axis] = slice(lo, hi)
                t._accum(g[tuple(index)])

    out._backward = back
    return out


def softmax(x: Tensor, axis: int = -1) -> Tensor:
    """Numerically stable softmax along one axis; slices sum to 1."""
    z = x.data - np.max(x.data, axis=axis, keepdims=True)
    e = np.exp(z)
    y = e / np.sum(e, axis=axis, keepdims=True)
    out = Tensor(y, _parents=(x,), _op="softmax")

    def back(g):
        if x.requires_grad:
            dot = np.sum(g * y, axis=axis, keepdims=True)
            x._accum(y * (g - dot))

    out._backward = back
    return out


# -- convolution ----------------------------------------------------------


def _im2col(x: np.ndarray, kh: int, kw: int, stride: int, ph: int, pw: int):
    n, c, h, w = x.shape
    if h + 2 * ph < kh or w + 2 * pw < kw:
        raise ValidationError(f"kernel ({kh}x{kw}) larger than padded input ({h + 2 * ph}x{w + 2 * pw})")
    xp = np.pad(x, ((0, 0), (0, 0), (ph, ph), (pw, pw)))
    oh = (h + 2 * ph - kh) // stride + 1
    ow = (w + 2 * pw - kw) // stride + 1
    s0, s1, s2, s3 = xp.strides
    view = np.lib.stride_tricks.as_strided(
        xp, (n, c, kh, kw, oh, ow), (s0, s1, s2, s3, s2 * stride, s3 * stride)
    )
    return np.ascontiguousarray(view).reshape(n, c * kh * kw, oh * ow), oh, ow


def _col2im(cols: np.ndarray, n: int, c: int, h: int, w: int, kh: int, kw: int, stride: int, ph: int, pw: int, oh: int, ow: int):
    out = np.zeros((n, c, h + 2 * ph, w + 2 * pw))
    blocks = cols.reshape(n, c, kh, kw, oh, ow)
    for i in range(kh):
        for j in range(kw):
            out[:, :, i : i + stride * oh : stride, j : j + stride * ow : stride] += blocks[:, :, i, j]
    if ph or pw:
        out = out[:, :, ph : h + ph, pw : w + pw]
    return out


def _conv_padding(padding, kh, kw, stride):
    if padding == "valid":
        return 0, 0
    if padding == "same":
        if stride != 1:
            raise ValidationError("padding='same' requires stride 1")
        if kh % 2 == 0 or kw % 2 == 0:
            raise ValidationError("padding='same' requires odd kernel sizes")
        return (kh - 1) // 2, (kw - 1) // 2
    raise ValidationError(f"padding must be 'same' or 'valid', got {padding!r}")


def conv2d(x: Tensor, kernel: Tensor, bias: Tensor = None, stride: int = 1, padding: str = "same") -> Tensor:
    """2-D cross-correlation: x (n,c_in,h,w) with kernel (c_out,c_in,kh,kw)."""
    n, c_in, h, w = x.data.shape
    c_out, c_k, kh, kw = kernel.data.shape
    if c_k != c_in:
        raise ValidationError(f"kernel expects {c_k} input channels, input has {c_in}")
    ph, pw = _conv_padding(padding, kh, kw, stride)
    cols, oh, ow = _im2col(x.data, kh, kw, stride, ph, pw)
    k2 = kernel.data.reshape(c_out, c_in * kh * kw)
    y = (k2 @ cols).reshape(n, c_out, oh, ow)
    if bias is not None:
        y = y + bias.data.reshape(1, c_out, 1, 1)
    parents = (x, kernel) if bias is None else (x, kernel, bias)
    out = Tensor(y, _parents=parents, _op="conv2d")

    def back(g):
        g2 = g.reshape(n, c_out, oh * ow)
        if kernel.requires_grad:
            dk = np.matmul(g2, cols.transpose(0, 2, 1)).sum(axis=0)
            kernel._accum(dk.reshape(kernel.data.shape))
        if x.requires_grad:
            dcols = np.matmul(k2.T, g2)
            x._accum(_col2im(dcols, n, c_in, h, w, kh, kw, stride, ph, pw, oh, ow))
        if bias is not None and bias.requires_grad:
            bias._accum(g.sum(axis=(0, 2, 3)))

    out._backward = back
    return out


def conv2d_transpose(x: Tensor, kernel: Tensor, stride: int = 1, bias: Tensor = None) -> Tensor:
    """Transposed convolution: the gradient of `conv2d` used as a forward map.

    x has the conv2d output layout (n, c_out, h, w) and the kernel keeps the
    conv2d layout (c_out, c_in, kh, kw); the result has c_in channels and
    spatial dims (h-1)*stride + k, so with k == stride the output is an
    exact stride-fold expansion.
    """
    n, c_out, h, w = x.data.shape
    ck_out, c_in, kh, kw = kernel.data.shape
    if ck_out != c_out:
        raise ValidationError(f"kernel expects {ck_out} input channels, input has {c_out}")
    oh = (h - 1) * stride + kh
    ow = (w - 1) * stride + kw
    k2 = kernel.data.reshape(c_out, c_in * kh * kw)
    x2 = x.data.reshape(n, c_out, h * w)
    cols = np.matmul(k2.T, x2)
    y = _col2im(cols, n, c_in, oh, ow, kh, kw, stride, 0, 0, h, w)
    if bias is not None:
        y = y + bias.data.reshape(1, c_in, 1, 1)
    parents = (x, kernel) if bias is None else (x, kernel, bias)
    out = Tensor(y, _parents=parents, _op="conv2d_transpose")

    def back(g):
        gcols, _, _ = _im2col(g, kh, kw, stride, 0, 0)
        if x.requires_grad:
            dx = np.matmul(k2, gcols).reshape(n, c_out, h, w)
            x._accum(dx)
        if kernel.requires_grad:
            dk = np.matmul(x2, gcols.transpose(0, 2, 1)).sum(axis=0)
            kernel._accum(dk.reshape(kernel.data.shape))
        if bias is not None and bias.requires_grad:
            bias._accum(g.sum(axis=(0, 2, 3)))

    out._backward = back
    return out
