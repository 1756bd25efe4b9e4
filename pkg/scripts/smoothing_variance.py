"""Measured variance reduction of the EMA smoother against d / (2 - d).

A box jittered by uniform noise is fed through the tracker; the ratio of
smoothed to raw x1 variance should approach the stationary AR(1) value.
"""

import argparse
import random
import statistics

from detmath.boxes import BBox
from detmath.smoothing import Detection, SmoothConfig, smooth_stream

BURN_IN = 20


def variance_ratio(decay, seeds, frames, amplitude):
    raw_total = smooth_total = 0.0
    for seed in range(seeds):
        rng = random.Random(seed)
        stream = [[Detection(0, BBox(*(c + rng.uniform(-amplitude, amplitude) for c in (10.0, 10.0, 50.0, 50.0))),
                             0.9, f)] for f in range(frames)]
        out = smooth_stream(stream, SmoothConfig(decay=decay))
        raw_total += statistics.pvariance([f[0].bbox.x1 for f in stream[BURN_IN:]])
        smooth_total += statistics.pvariance([f[0].detection.bbox.x1 for f in out[BURN_IN:]])
    return smooth_total / raw_total


def main():
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--seeds", type=int, default=10)
    parser.add_argument("--frames", type=int, default=500)
    parser.add_argument("--amplitude", type=float, default=2.0)
    args = parser.parse_args()

    print(f"{'decay':>6} {'measured':>9} {'expected':>9} {'rel':>7}")
    for decay in (0.1, 0.2, 0.3, 0.5, 0.7, 1.0):
        measured = variance_ratio(decay, args.seeds, args.frames, args.amplitude)
        expected = decay / (2 - decay)
        print(f"{decay:>6.2f} {measured:>9.4f} {expected:>9.4f} {measured / expected - 1:>+7.1%}")


if __name__ == "__main__":
    main()
