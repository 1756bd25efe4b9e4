"""Small forward-only dense tensor engine.

Just enough to run the attention forward passes: permute, 2-D matmul,
same-padded conv2d, and a few elementwise maps. Storage is a row-major
float64 numpy array that is marked read-only, so a ``Tensor`` behaves as an
immutable value.
"""

from __future__ import annotations

import math
from typing import Iterable, Sequence

import numpy as np


class Tensor:
    __slots__ = ("_array",)

    def __init__(self, shape: Sequence[int], data: Iterable[float]):
        shape = tuple(int(d) for d in shape)
        if not shape or any(d < 1 for d in shape):
            raise ValueError(f"every dimension must be >= 1, got shape {shape}")
        flat = np.array(list(data) if not isinstance(data, np.ndarray) else data,
                        dtype=np.float64).ravel()
        if flat.size != math.prod(shape):
            raise ValueError(
                f"data length {flat.size} does not match shape {shape} "
                f"(expected {math.prod(shape)})"
            )
        arr = flat.reshape(shape).copy()
        arr.flags.writeable = False
        self._array = arr

    @classmethod
    def from_array(cls, array) -> "Tensor":
        array = np.asarray(array, dtype=np.float64)
        return cls(array.shape, array.ravel())

    @classmethod
    def zeros(cls, shape: Sequence[int]) -> "Tensor":
        return cls(shape, np.zeros(math.prod(shape)))

    @classmethod
    def full(cls, shape: Sequence[int], value: float) -> "Tensor":
        return cls(shape, np.full(math.prod(shape), float(value)))

    @property
    def shape(self) -> tuple[int, ...]:
        return self._array.shape

    @property
    def rank(self) -> int:
        return self._array.ndim

    @property
    def data(self) -> tuple[float, ...]:
        """Flat row-major values."""
        return tuple(self._array.ravel().tolist())

    def numpy(self) -> np.ndarray:
        """Read-only view of the underlying array."""
        return self._array

    def reshape(self, shape: Sequence[int]) -> "Tensor":
        return Tensor(shape, self._array.ravel())

    def __eq__(self, other) -> bool:
        if not isinstance(other, Tensor):
            return NotImplemented
        return self.shape == other.shape and bool(np.array_equal(self._array, other._array))

    def __hash__(self):
        return hash((self.shape, self._array.tobytes()))

    def __repr__(self) -> str:
        return f"Tensor(shape={self.shape})"


def _check_permutation(axes: Sequence[int], rank: int) -> tuple[int, ...]:
    axes = tuple(int(a) for a in axes)
    if sorted(axes) != list(range(rank)):
        raise ValueError(f"axes {axes} is not a permutation of 0..{rank - 1}")
    return axes


def inverse_permutation(axes: Sequence[int]) -> tuple[int, ...]:
    inv = [0] * len(axes)
    for i, a in enumerate(axes):
        inv[a] = i
    return tuple(inv)


def permute(t: Tensor, axes: Sequence[int]) -> Tensor:
    axes = _check_permutation(axes, t.rank)
    return Tensor.from_array(np.transpose(t.numpy(), axes))


def matmul(a: Tensor, b: Tensor) -> Tensor:
    if a.rank != 2 or b.rank != 2:
        raise ValueError(f"matmul needs rank-2 operands, got {a.shape} and {b.shape}")
    if a.shape[1] != b.shape[0]:
        raise ValueError(f"inner dimensions differ: {a.shape} x {b.shape}")
    return Tensor.from_array(a.numpy() @ b.numpy())


def conv2d(inp: Tensor, kernels: Tensor) -> Tensor:
    """Zero-padded 'same' cross-correlation: (C,H,W) * (K,C,kh,kw) -> (K,H,W)."""
    if inp.rank != 3 or kernels.rank != 4:
        raise ValueError(f"conv2d expects C×H×W input and K×C×kh×kw kernels, "
                         f"got {inp.shape} and {kernels.shape}")
    c, h, w = inp.shape
    k, kc, kh, kw = kernels.shape
    if kc != c:
        raise ValueError(f"kernel channels {kc} != input channels {c}")
    if kh % 2 == 0 or kw % 2 == 0:
        raise ValueError(f"kernel size must be odd, got {kh}x{kw}")
    ph, pw = (kh - 1) // 2, (kw - 1) // 2
    padded = np.zeros((c, h + 2 * ph, w + 2 * pw))
    padded[:, ph:ph + h, pw:pw + w] = inp.numpy()
    weights = kernels.numpy()
    out = np.zeros((k, h, w))
    for i in range(kh):
        for j in range(kw):
            window = padded[:, i:i + h, j:j + w]
            out += np.tensordot(weights[:, :, i, j], window, axes=([1], [0]))
    return Tensor.from_array(out)


def sigmoid(t: Tensor) -> Tensor:
    x = t.numpy()
    # split by sign so exp never overflows
    out = np.empty_like(x)
    pos = x >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-x[pos]))
    ex = np.exp(x[~pos])
    out[~pos] = ex / (1.0 + ex)
    return Tensor.from_array(out)


def relu(t: Tensor) -> Tensor:
    return Tensor.from_array(np.maximum(t.numpy(), 0.0))


def softmax(v: Sequence[float]) -> list[float]:
    x = np.asarray(v, dtype=np.float64)
    if x.ndim != 1 or x.size == 0:
        raise ValueError("softmax needs a non-empty 1-D sequence")
    e = np.exp(x - x.max())
    return (e / e.sum()).tolist()


def _same_shape(a: Tensor, b: Tensor, op: str) -> None:
    if a.shape != b.shape:
        raise ValueError(f"{op}: shape mismatch {a.shape} vs {b.shape}")


def hadamard(a: Tensor, b: Tensor) -> Tensor:
    _same_shape(a, b, "hadamard")
    return Tensor.from_array(a.numpy() * b.numpy())


def add(a: Tensor, b: Tensor) -> Tensor:
    _same_shape(a, b, "add")
    return Tensor.from_array(a.numpy() + b.numpy())


def scale(t: Tensor, factor: float) -> Tensor:
    return Tensor.from_array(t.numpy() * float(factor))
