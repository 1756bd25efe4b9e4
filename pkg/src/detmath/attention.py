"""Global channel/spatial attention and EMA-scored feature aggregation.

``gom_forward`` applies channel attention then spatial attention to a
C×H×W feature map, each as an elementwise gate in (0, 1):

    F2 = Mc(F1) * F1
    F3 = Ms(F2) * F2

Channel attention runs a two-layer MLP over the channel vector at every
spatial site (after rearranging to W×H×C). Spatial attention is two
same-padded convolutions with no pooling.

The SCM side keeps a score per input that evolves as an exponential
moving average; softmax of the scores weights a convex combination of
the inputs.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace
from typing import Sequence

import numpy as np

from .tensor import (
    Tensor,
    add,
    conv2d,
    hadamard,
    inverse_permutation,
    matmul,
    permute,
    relu,
    scale,
    sigmoid,
    softmax,
)

# C×H×W -> W×H×C; self-inverse
CHANNEL_LAST_AXES = (2, 1, 0)
DEFAULT_REDUCTION = 4
DEFAULT_KERNEL = 7
INIT_RANGE = 0.1


@dataclass(frozen=True)
class GomParams:
    channels: int
    reduction_ratio: int
    kernel_size: int
    mlp_w1: Tensor  # [C/r, C]
    mlp_b1: Tensor  # [C/r]
    mlp_w2: Tensor  # [C, C/r]
    mlp_b2: Tensor  # [C]
    conv1_kernels: Tensor  # [C/r, C, k, k]
    conv2_kernels: Tensor  # [C, C/r, k, k]

    def __post_init__(self):
        c, r, k = self.channels, self.reduction_ratio, self.kernel_size
        if c < 1 or r < 1:
            raise ValueError(f"channels and reduction_ratio must be positive, got C={c}, r={r}")
        if c % r:
            raise ValueError(f"channels {c} not divisible by reduction ratio {r}")
        if k < 1 or k % 2 == 0:
            raise ValueError(f"kernel_size must be an odd positive integer, got {k}")
        m = c // r
        expected = {
            "mlp_w1": (m, c),
            "mlp_b1": (m,),
            "mlp_w2": (c, m),
            "mlp_b2": (c,),
            "conv1_kernels": (m, c, k, k),
            "conv2_kernels": (c, m, k, k),
        }
        for name, shape in expected.items():
            got = getattr(self, name).shape
            if got != shape:
                raise ValueError(f"{name} has shape {got}, expected {shape} for C={c}, r={r}, k={k}")

    @property
    def hidden(self) -> int:
        return self.channels // self.reduction_ratio

    @classmethod
    def init(cls, channels: int, reduction_ratio: int = DEFAULT_REDUCTION,
             kernel_size: int = DEFAULT_KERNEL, seed: int = 0) -> "GomParams":
        """Seeded uniform(-0.1, 0.1) initialization."""
        if reduction_ratio < 1 or channels % reduction_ratio:
            raise ValueError(f"channels {channels} not divisible by reduction ratio {reduction_ratio}")
        rng = np.random.default_rng(seed)
        m, c, k = channels // reduction_ratio, channels, kernel_size

        def draw(*shape):
            return Tensor.from_array(rng.uniform(-INIT_RANGE, INIT_RANGE, size=shape))

        return cls(
            channels=c, reduction_ratio=reduction_ratio, kernel_size=k,
            mlp_w1=draw(m, c), mlp_b1=draw(m), mlp_w2=draw(c, m), mlp_b2=draw(c),
            conv1_kernels=draw(m, c, k, k), conv2_kernels=draw(c, m, k, k),
        )

    @classmethod
    def zeros(cls, channels: int, reduction_ratio: int = DEFAULT_REDUCTION,
              kernel_size: int = DEFAULT_KERNEL) -> "GomParams":
        m, c, k = channels // reduction_ratio, channels, kernel_size
        return cls(
            channels=c, reduction_ratio=reduction_ratio, kernel_size=k,
            mlp_w1=Tensor.zeros((m, c)), mlp_b1=Tensor.zeros((m,)),
            mlp_w2=Tensor.zeros((c, m)), mlp_b2=Tensor.zeros((c,)),
            conv1_kernels=Tensor.zeros((m, c, k, k)), conv2_kernels=Tensor.zeros((c, m, k, k)),
        )


def _check_input(f: Tensor, p: GomParams) -> tuple[int, int, int]:
    if f.rank != 3 or f.shape[0] != p.channels:
        raise ValueError(f"expected a {p.channels}×H×W feature map, got shape {f.shape}")
    return f.shape


def _add_bias(x: Tensor, bias: Tensor) -> Tensor:
    rows = x.shape[0]
    return add(x, Tensor.from_array(np.broadcast_to(bias.numpy(), (rows, bias.shape[0]))))


def channel_attention(f1: Tensor, p: GomParams) -> Tensor:
    c, h, w = _check_input(f1, p)
    sites = permute(f1, CHANNEL_LAST_AXES).reshape((w * h, c))
    hidden = relu(_add_bias(matmul(sites, permute(p.mlp_w1, (1, 0))), p.mlp_b1))
    out = _add_bias(matmul(hidden, permute(p.mlp_w2, (1, 0))), p.mlp_b2)
    back = permute(out.reshape((w, h, c)), inverse_permutation(CHANNEL_LAST_AXES))
    return sigmoid(back)


def spatial_attention(f2: Tensor, p: GomParams) -> Tensor:
    _check_input(f2, p)
    hidden = relu(conv2d(f2, p.conv1_kernels))
    return sigmoid(conv2d(hidden, p.conv2_kernels))


def gom_forward(f1: Tensor, p: GomParams, *, channel_map: Tensor | None = None,
                spatial_map: Tensor | None = None) -> Tensor:
    """Channel then spatial gating of ``f1``.

    ``channel_map`` / ``spatial_map`` replace the computed attention maps;
    they exist for tests that need to pin an attention map.
    """
    _check_input(f1, p)
    mc = channel_attention(f1, p) if channel_map is None else channel_map
    f2 = hadamard(mc, f1)
    ms = spatial_attention(f2, p) if spatial_map is None else spatial_map
    return hadamard(ms, f2)


@dataclass(frozen=True)
class EmaAttentionState:
    scores: tuple[float, ...]
    decay: float
    step: int = 0

    def __post_init__(self):
        object.__setattr__(self, "scores", tuple(float(s) for s in self.scores))
        if not 0 < self.decay <= 1:
            raise ValueError(f"decay must lie in (0, 1], got {self.decay}")
        if not all(math.isfinite(s) for s in self.scores):
            raise ValueError("scores must be finite")
        if self.step < 0:
            raise ValueError(f"step must be nonnegative, got {self.step}")

    @property
    def n(self) -> int:
        return len(self.scores)


def ema_blend(previous: float, current: float, decay: float) -> float:
    """(1 - decay) * previous + decay * current.

    Written as ``current + (1 - decay) * (previous - current)`` so that
    decay == 1 and previous == current both return ``current`` exactly.
    """
    return current + (1.0 - decay) * (previous - current)


def ema_update(state: EmaAttentionState, new_scores: Sequence[float]) -> EmaAttentionState:
    if len(new_scores) != state.n:
        raise ValueError(f"expected {state.n} scores, got {len(new_scores)}")
    blended = tuple(ema_blend(s, float(n), state.decay) for s, n in zip(state.scores, new_scores))
    return replace(state, scores=blended, step=state.step + 1)


def attention_weights(state: EmaAttentionState) -> list[float]:
    return softmax(state.scores)


def scm_forward(features: Sequence[Tensor], state: EmaAttentionState,
                new_scores: Sequence[float]) -> tuple[Tensor, EmaAttentionState]:
    if len(features) != state.n:
        raise ValueError(f"expected {state.n} feature tensors, got {len(features)}")
    shape = features[0].shape
    for f in features:
        if f.shape != shape:
            raise ValueError(f"feature shapes differ: {shape} vs {f.shape}")
    new_state = ema_update(state, new_scores)
    weights = attention_weights(new_state)
    out = scale(features[0], weights[0])
    for f, wt in zip(features[1:], weights[1:]):
        out = add(out, scale(f, wt))
    return out, new_state


@dataclass(frozen=True)
class LinearScoringHead:
    """Stand-in score source: a linear map over globally pooled channels."""

    weights: tuple[float, ...]
    bias: float = 0.0

    @classmethod
    def init(cls, channels: int, seed: int = 0) -> "LinearScoringHead":
        rng = np.random.default_rng(seed)
        return cls(tuple(rng.uniform(-1.0, 1.0, size=channels).tolist()),
                   float(rng.uniform(-1.0, 1.0)))

    def __call__(self, feature: Tensor) -> float:
        pooled = feature.numpy().mean(axis=(1, 2))
        return float(np.dot(self.weights, pooled) + self.bias)


def sppf_placeholder(t: Tensor) -> Tensor:
    return t


def toy_pipeline(frames: Sequence[Tensor], gom: GomParams, head: LinearScoringHead,
                 state: EmaAttentionState) -> tuple[Tensor, EmaAttentionState]:
    """GOM on each input, then the (identity) SPPF slot, then SCM across inputs."""
    refined = [sppf_placeholder(gom_forward(f, gom)) for f in frames]
    scores = [head(f) for f in refined]
    return scm_forward(refined, state, scores)
