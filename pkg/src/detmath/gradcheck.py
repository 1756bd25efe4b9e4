"""Randomized finite-difference check of the loss gradients."""

from __future__ import annotations

import random
from dataclasses import dataclass

from .boxes import BBox, Variant, iou, kink_distance, loss, numeric_grad

FD_STEP = 1e-6


def random_pair(rng: random.Random) -> tuple[BBox, BBox]:
    """A (pred, gt) pair with positive overlap, in a unit-sized frame."""
    while True:
        gt = BBox.from_center(rng.uniform(0.2, 0.8), rng.uniform(0.2, 0.8),
                              rng.uniform(0.05, 0.5), rng.uniform(0.05, 0.5))
        cx, cy = gt.center
        pred = BBox.from_center(cx + rng.uniform(-0.25, 0.25), cy + rng.uniform(-0.25, 0.25),
                                rng.uniform(0.05, 0.5), rng.uniform(0.05, 0.5))
        if iou(pred, gt) > 0:
            return pred, gt


def relative_error(analytic, numeric, floor: float = 1e-6) -> float:
    """Max componentwise difference over the larger gradient's max-norm."""
    diff = max(abs(a - n) for a, n in zip(analytic, numeric))
    scale = max(max(abs(a) for a in analytic), max(abs(n) for n in numeric), floor)
    return diff / scale


@dataclass(frozen=True)
class GradCheckSummary:
    variant: Variant
    samples: int
    checked: int
    skipped: int
    max_rel_err: float
    tol: float

    @property
    def passed(self) -> bool:
        return self.checked > 0 and self.max_rel_err < self.tol

    def lines(self) -> list[str]:
        return [
            f"variant      {self.variant.value}",
            f"samples      {self.samples}",
            f"checked      {self.checked}",
            f"skipped      {self.skipped}",
            f"max_rel_err  {self.max_rel_err:.9g}",
            f"tol          {self.tol:.9g}",
            f"result       {'PASS' if self.passed else 'FAIL'}",
        ]


def gradient_check(variant, samples: int, seed: int, tol: float = 1e-4,
                   step: float = FD_STEP) -> GradCheckSummary:
    """Pairs within ``step`` of a kink are skipped and counted."""
    if samples < 1:
        raise ValueError(f"samples must be >= 1, got {samples}")
    variant = Variant.parse(variant)
    rng = random.Random(seed)
    worst, skipped = 0.0, 0
    for _ in range(samples):
        pred, gt = random_pair(rng)
        if kink_distance(pred, gt) <= step:
            skipped += 1
            continue
        err = relative_error(loss(variant, pred, gt).grad, numeric_grad(variant, pred, gt, step))
        worst = max(worst, err)
    return GradCheckSummary(variant, samples, samples - skipped, skipped, worst, tol)
