"""mAP50 / mAP50-95 with COCO-style 101-point interpolation.

Detections of a class are ranked by score (stable, so equal scores keep
input order), each one is greedily matched to the highest-IoU unmatched
ground truth of the same class in the same image, and AP is the mean of the
interpolated precision at recall 0.00, 0.01, ..., 1.00. mAP is the macro
mean over classes that have at least one ground-truth box.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field
from typing import NamedTuple, Sequence

from .boxes import BBox, iou
from .formats import read_jsonl, write_table
from .smoothing import Detection

RECALL_POINTS = 101


def coco_thresholds() -> tuple[float, ...]:
    return tuple(round(0.5 + 0.05 * i, 10) for i in range(10))


def parse_thresholds(text: str) -> tuple[float, ...]:
    """``start:stop:step`` (inclusive stop) or a comma-separated list."""
    if ":" in text:
        try:
            start, stop, step = (float(p) for p in text.split(":"))
        except ValueError:
            raise ValueError(f"threshold range must be start:stop:step, got {text!r}") from None
        if step <= 0 or stop < start:
            raise ValueError(f"bad threshold range {text!r}")
        n = int(round((stop - start) / step))
        values = tuple(round(start + step * i, 10) for i in range(n + 1))
    else:
        values = tuple(float(p) for p in text.split(",") if p.strip())
    if not values or any(not 0 < t < 1 for t in values):
        raise ValueError(f"thresholds must be non-empty and inside (0, 1), got {text!r}")
    return values


@dataclass(frozen=True)
class GroundTruth:
    image_id: str
    class_id: int
    bbox: BBox


class MatchResult(NamedTuple):
    detections: list[Detection]  # ranked by descending score
    is_tp: list[bool]
    n_gt: int
    false_negatives: int


def rank(detections: Sequence[Detection]) -> list[Detection]:
    return sorted(detections, key=lambda d: -d.score)


def match_for_ap(detections: Sequence[Detection], ground_truths: Sequence[GroundTruth],
                 iou_threshold: float) -> MatchResult:
    ranked = rank(detections)
    by_key: dict[tuple[str, int], list[GroundTruth]] = {}
    for g in ground_truths:
        by_key.setdefault((g.image_id, g.class_id), []).append(g)
    used: dict[tuple[str, int], set[int]] = {k: set() for k in by_key}

    flags = []
    for d in ranked:
        key = (d.image_id, d.class_id)
        candidates = by_key.get(key, [])
        best, best_iou = None, -1.0
        for gi, g in enumerate(candidates):
            if gi in used[key]:
                continue
            overlap = iou(d.bbox, g.bbox)
            if overlap > best_iou:
                best, best_iou = gi, overlap
        if best is not None and best_iou >= iou_threshold:
            used[key].add(best)
            flags.append(True)
        else:
            flags.append(False)
    tp = sum(flags)
    return MatchResult(ranked, flags, len(ground_truths), len(ground_truths) - tp)


def average_precision(is_tp: Sequence[bool], n_gt: int) -> float:
    """101-point interpolated AP from TP flags in rank order."""
    if n_gt <= 0:
        return 0.0
    cum_tp = []
    tp = 0
    for flag in is_tp:
        tp += bool(flag)
        cum_tp.append(tp)
    precision = [t / (k + 1) for k, t in enumerate(cum_tp)]
    # envelope: best precision at this rank or any later (higher-recall) rank
    envelope = precision[:]
    for k in range(len(envelope) - 2, -1, -1):
        envelope[k] = max(envelope[k], envelope[k + 1])

    total = 0.0
    k = 0
    for i in range(RECALL_POINTS):
        # first rank with recall >= i/100, compared in exact integers
        while k < len(cum_tp) and cum_tp[k] * (RECALL_POINTS - 1) < i * n_gt:
            k += 1
        if k == len(cum_tp):
            break
        total += envelope[k]
    return total / RECALL_POINTS


@dataclass
class EvalReport:
    thresholds: tuple[float, ...]
    per_class_ap: dict[int, dict[float, float]]
    map_by_threshold: dict[float, float]
    map50: float
    map50_95: float
    counts: dict[int, dict[float, tuple[int, int, int]]] = field(default_factory=dict)

    def to_csv(self) -> str:
        rows = [
            (cls, f"{t:.2f}", self.per_class_ap[cls][t])
            for cls in sorted(self.per_class_ap)
            for t in self.thresholds
        ]
        table = write_table(("class", "threshold", "ap"), rows)
        summary = write_table(("metric", "value"), [("map50", self.map50), ("map50_95", self.map50_95)])
        return table + "\n" + summary


def _mean(xs) -> float:
    xs = list(xs)
    return sum(xs) / len(xs) if xs else 0.0


def evaluate_records(ground_truths: Sequence[GroundTruth], detections: Sequence[Detection],
                     thresholds: Sequence[float] | None = None) -> EvalReport:
    thresholds = tuple(coco_thresholds() if thresholds is None else thresholds)
    if not thresholds or any(not 0 < t < 1 for t in thresholds):
        raise ValueError(f"thresholds must be non-empty and inside (0, 1), got {thresholds}")
    classes = sorted({g.class_id for g in ground_truths})
    known = set(classes)
    kept = []
    for d in detections:
        if d.class_id in known:
            kept.append(d)
        else:
            warnings.warn(f"prediction for class {d.class_id} which has no ground truth; ignored",
                          stacklevel=2)

    eval_at = list(thresholds) + ([0.5] if 0.5 not in thresholds else [])
    per_class_ap: dict[int, dict[float, float]] = {}
    counts: dict[int, dict[float, tuple[int, int, int]]] = {}
    for cls in classes:
        gts = [g for g in ground_truths if g.class_id == cls]
        dets = [d for d in kept if d.class_id == cls]
        per_class_ap[cls], counts[cls] = {}, {}
        for t in eval_at:
            m = match_for_ap(dets, gts, t)
            per_class_ap[cls][t] = average_precision(m.is_tp, m.n_gt)
            tp = sum(m.is_tp)
            counts[cls][t] = (tp, len(m.is_tp) - tp, m.false_negatives)

    map_at = {t: _mean(per_class_ap[c][t] for c in classes) for t in eval_at}
    return EvalReport(
        thresholds=thresholds,
        per_class_ap={c: {t: per_class_ap[c][t] for t in thresholds} for c in classes},
        map_by_threshold={t: map_at[t] for t in thresholds},
        map50=map_at[0.5],
        map50_95=_mean(map_at[t] for t in thresholds),
        counts=counts,
    )


def load_ground_truth(path) -> list[GroundTruth]:
    return [GroundTruth(r.image_id, r.class_id, r.bbox) for r in read_jsonl(path)]


def load_predictions(path) -> list[Detection]:
    return [
        Detection(class_id=r.class_id, bbox=r.bbox, score=r.score,
                  frame_id=r.frame_id, image_id=r.image_id)
        for r in read_jsonl(path, require_score=True)
    ]


def evaluate(gt_file, pred_file, thresholds: Sequence[float] | None = None) -> EvalReport:
    return evaluate_records(load_ground_truth(gt_file), load_predictions(pred_file), thresholds)
