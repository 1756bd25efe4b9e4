"""Channel-then-spatial attention and EMA fusion on random feature maps."""

import argparse

import numpy as np

from detmath.attention import (
    EmaAttentionState,
    GomParams,
    LinearScoringHead,
    attention_weights,
    gom_forward,
    toy_pipeline,
)
from detmath.tensor import Tensor


def main():
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--channels", type=int, default=16)
    parser.add_argument("--size", type=int, default=20)
    parser.add_argument("--frames", type=int, default=8)
    parser.add_argument("--decay", type=float, default=0.3)
    parser.add_argument("--seed", type=int, default=0)
    args = parser.parse_args()

    rng = np.random.default_rng(args.seed)
    shape = (args.channels, args.size, args.size)
    gom = GomParams.init(args.channels, seed=args.seed)
    f1 = Tensor.from_array(rng.standard_normal(shape))
    f3 = gom_forward(f1, gom).numpy()
    gain = np.abs(f3) / np.maximum(np.abs(f1.numpy()), 1e-300)
    print(f"gom gain  min {gain.min():.4f}  mean {gain.mean():.4f}  max {gain.max():.4f}")

    head = LinearScoringHead.init(args.channels, seed=args.seed)
    state = EmaAttentionState((0.0,) * 3, args.decay)
    history = [Tensor.from_array(rng.standard_normal(shape)) for _ in range(3)]
    for t in range(args.frames):
        fused, state = toy_pipeline(history, gom, head, state)
        weights = attention_weights(state)
        print(f"frame {t}: scores " + " ".join(f"{s:+.4f}" for s in state.scores)
              + "  weights " + " ".join(f"{w:.3f}" for w in weights)
              + f"  |fused| {np.abs(fused.numpy()).mean():.4f}")
        history = history[1:] + [Tensor.from_array(rng.standard_normal(shape))]


if __name__ == "__main__":
    main()
