"""Box-regression convergence experiments.

Plain gradient descent on the four predicted corners,
``theta <- theta - lr * grad``, driven by one of the IoU-family losses.
Every loss here is scale invariant, so its gradient scales as 1/size.
Tasks are generated in a frame where box sides are 0.3-0.9 units: small
enough that lr 0.01 does not overshoot, large enough that disjoint boxes
close the gap within a couple of thousand steps.
"""

from __future__ import annotations

import math
import random
import statistics
from dataclasses import dataclass, field
from typing import Sequence

from .boxes import BBox, Variant, iou, loss
from .formats import write_table

REGIMES = ("overlap", "disjoint", "aspect-skew", "scale-skew")
REPAIR_EPS = 1e-6
FRAME_SCALE = 3.0


@dataclass(frozen=True)
class RegressionTask:
    gt: BBox
    init: BBox
    seed: int
    task_id: int = 0


@dataclass(frozen=True)
class TrainConfig:
    variant: Variant = Variant.AIOU
    learning_rate: float = 0.01
    steps: int = 2000
    seed: int = 0
    success_iou: float = 0.9
    backtrack: bool = False
    max_halvings: int = 40

    def __post_init__(self):
        object.__setattr__(self, "variant", Variant.parse(self.variant))
        if not self.learning_rate > 0:
            raise ValueError(f"learning_rate must be positive, got {self.learning_rate}")
        if self.steps < 1:
            raise ValueError(f"steps must be >= 1, got {self.steps}")
        if not 0 < self.success_iou < 1:
            raise ValueError(f"success_iou must lie in (0, 1), got {self.success_iou}")


@dataclass
class TrainRecord:
    variant: Variant
    task_id: int
    history: list[tuple[int, float, float]] = field(default_factory=list)
    steps_to_success: int | None = None
    final_box: BBox | None = None
    repairs: list[int] = field(default_factory=list)
    aborted: str | None = None

    @property
    def final_iou(self) -> float:
        return self.history[-1][2] if self.history else float("nan")

    @property
    def final_loss(self) -> float:
        return self.history[-1][1] if self.history else float("nan")


def _gt_box(rng: random.Random) -> BBox:
    return BBox.from_center(
        rng.uniform(0.3, 0.7), rng.uniform(0.3, 0.7),
        rng.uniform(0.1, 0.3), rng.uniform(0.1, 0.3),
    )


def _make_task(rng: random.Random, regime: str) -> tuple[BBox, BBox]:
    gt, init = _make_unit_task(rng, regime)
    return gt.scale(FRAME_SCALE), init.scale(FRAME_SCALE)


def _make_unit_task(rng: random.Random, regime: str) -> tuple[BBox, BBox]:
    gt = _gt_box(rng)
    cx, cy = gt.center
    gw, gh = gt.width, gt.height
    if regime == "overlap":
        while True:
            init = BBox.from_center(
                cx + rng.uniform(-0.6, 0.6) * gw, cy + rng.uniform(-0.6, 0.6) * gh,
                gw * rng.uniform(0.5, 2.0), gh * rng.uniform(0.5, 2.0),
            )
            if 0.1 <= iou(init.scale(FRAME_SCALE), gt.scale(FRAME_SCALE)) <= 0.5:
                return gt, init
    if regime == "disjoint":
        w, h = rng.uniform(0.1, 0.3), rng.uniform(0.1, 0.3)
        gap = rng.uniform(0.02, 0.2)
        sign = rng.choice((-1.0, 1.0))
        if rng.random() < 0.5:
            dx = sign * ((w + gw) / 2 + gap)
            dy = rng.uniform(-0.5, 0.5) * gh
        else:
            dx = rng.uniform(-0.5, 0.5) * gw
            dy = sign * ((h + gh) / 2 + gap)
        return gt, BBox.from_center(cx + dx, cy + dy, w, h)
    if regime == "aspect-skew":
        factor = rng.uniform(2.0, 4.0)
        if rng.random() < 0.5:
            factor = 1 / factor
        aspect = gw / gh * factor
        area = gw * gh * rng.uniform(0.8, 1.25)
        return gt, BBox.from_center(cx, cy, math.sqrt(area * aspect), math.sqrt(area / aspect))
    if regime == "scale-skew":
        s = rng.uniform(2.0, 3.0)
        if rng.random() < 0.5:
            s = 1 / s
        return gt, BBox.from_center(cx, cy, gw * s, gh * s)
    raise ValueError(f"unknown regime {regime!r} (expected one of {', '.join(REGIMES)})")


def gen_tasks(n: int, seed: int, regime: str) -> list[RegressionTask]:
    if n < 1:
        raise ValueError(f"need at least one task, got n={n}")
    if regime not in REGIMES:
        raise ValueError(f"unknown regime {regime!r} (expected one of {', '.join(REGIMES)})")
    tasks = []
    for i in range(n):
        task_seed = seed * 100_003 + i
        gt, init = _make_task(random.Random(task_seed), regime)
        tasks.append(RegressionTask(gt=gt, init=init, seed=task_seed, task_id=i))
    return tasks


def _repair(theta: list[float]) -> bool:
    repaired = False
    for lo, hi in ((0, 2), (1, 3)):
        if theta[hi] < theta[lo] + REPAIR_EPS:
            mid = (theta[lo] + theta[hi]) / 2
            theta[lo] = mid - REPAIR_EPS / 2
            theta[hi] = mid + REPAIR_EPS / 2
            if not theta[hi] > theta[lo]:
                theta[hi] = math.nextafter(theta[lo], math.inf)
            repaired = True
    return repaired


def train_box(task: RegressionTask, config: TrainConfig) -> TrainRecord:
    """Gradient descent from ``task.init`` toward ``task.gt``.

    Stops early once IoU reaches ``config.success_iou``. With ``backtrack``
    on, a step that would raise the loss is retried at half the step size
    until the loss does not increase.
    """
    record = TrainRecord(variant=config.variant, task_id=task.task_id)
    theta = list(task.init.as_tuple())
    gt = task.gt
    report = loss(config.variant, theta, gt)
    for step in range(config.steps):
        record.history.append((step, report.value, report.iou))
        if report.iou >= config.success_iou:
            record.steps_to_success = step
            break
        if not all(math.isfinite(g) for g in report.grad):
            record.aborted = f"non-finite gradient {report.grad} at step {step}, box {tuple(theta)}"
            break
        lr = config.learning_rate
        for _ in range(config.max_halvings + 1):
            candidate = [t - lr * g for t, g in zip(theta, report.grad)]
            repaired = _repair(candidate)
            new_report = loss(config.variant, candidate, gt)
            if not config.backtrack or new_report.value <= report.value:
                break
            lr /= 2
        else:
            # no decreasing step size found: stationary to machine precision
            candidate, repaired, new_report = theta, False, report
        if repaired:
            record.repairs.append(step)
        theta, report = candidate, new_report
    record.final_box = BBox(*theta)
    return record


@dataclass(frozen=True)
class VariantSummary:
    variant: Variant
    n_tasks: int
    success_rate: float
    median_steps: float
    final_iou_min: float
    final_iou_median: float
    final_iou_max: float


@dataclass
class ComparisonReport:
    summaries: list[VariantSummary]
    records: list[TrainRecord]

    def summary_for(self, variant) -> VariantSummary:
        variant = Variant.parse(variant)
        return next(s for s in self.summaries if s.variant is variant)


def summarize(variant, records: Sequence[TrainRecord]) -> VariantSummary:
    """Aggregate one variant's runs; failed runs count as infinitely slow."""
    steps = [r.steps_to_success if r.steps_to_success is not None else math.inf for r in records]
    finals = [r.final_iou for r in records]
    return VariantSummary(
        variant=Variant.parse(variant),
        n_tasks=len(records),
        success_rate=sum(s != math.inf for s in steps) / len(records),
        median_steps=statistics.median(steps),
        final_iou_min=min(finals),
        final_iou_median=statistics.median(finals),
        final_iou_max=max(finals),
    )


def compare_convergence(tasks: Sequence[RegressionTask], variants, config: TrainConfig) -> ComparisonReport:
    if not tasks:
        raise ValueError("need at least one task")
    variants = [Variant.parse(v) for v in variants]
    if len(variants) < 2:
        raise ValueError("need at least two variants to compare")
    summaries, records = [], []
    for variant in variants:
        cfg = TrainConfig(
            variant=variant, learning_rate=config.learning_rate, steps=config.steps,
            seed=config.seed, success_iou=config.success_iou, backtrack=config.backtrack,
            max_halvings=config.max_halvings,
        )
        runs = [train_box(t, cfg) for t in tasks]
        summaries.append(summarize(variant, runs))
        records.extend(runs)
    return ComparisonReport(summaries=summaries, records=records)


CURVE_COLUMNS = ("variant", "task", "step", "loss", "iou")
SUMMARY_COLUMNS = ("variant", "n_tasks", "success_rate", "median_steps_to_success",
                   "final_iou_min", "final_iou_median", "final_iou_max")
TASK_COLUMNS = ("variant", "task", "steps_to_success", "final_iou", "final_loss", "repairs", "aborted")


def curve_emit(records: Sequence[TrainRecord]) -> str:
    """Long-format CSV of loss and IoU per step."""
    if not records:
        raise ValueError("no records to emit")
    rows = (
        (r.variant.value, r.task_id, step, value, overlap)
        for r in records
        for step, value, overlap in r.history
    )
    return write_table(CURVE_COLUMNS, rows)


def summary_csv(summaries: Sequence[VariantSummary]) -> str:
    rows = (
        (s.variant.value, s.n_tasks, s.success_rate, s.median_steps,
         s.final_iou_min, s.final_iou_median, s.final_iou_max)
        for s in summaries
    )
    return write_table(SUMMARY_COLUMNS, rows)


def tasks_csv(records: Sequence[TrainRecord]) -> str:
    rows = (
        (r.variant.value, r.task_id,
         "" if r.steps_to_success is None else r.steps_to_success,
         r.final_iou, r.final_loss, len(r.repairs), r.aborted or "")
        for r in records
    )
    return write_table(TASK_COLUMNS, rows)
