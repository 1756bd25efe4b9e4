"""EMA smoothing of per-frame detections.

Detections are associated to existing tracks greedily by IoU (same class
only), then each matched track blends its box corners and score toward the
detection with the same update used for attention scores.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from typing import NamedTuple, Sequence

from .attention import ema_blend
from .boxes import BBox, iou

DEFAULT_DECAY = 0.3
DEFAULT_IOU_GATE = 0.3
DEFAULT_MAX_AGE = 5


@dataclass(frozen=True)
class Detection:
    class_id: int
    bbox: BBox
    score: float
    frame_id: int | None = None
    image_id: str = ""

    def __post_init__(self):
        if not 0.0 <= self.score <= 1.0:
            raise ValueError(f"score must lie in [0, 1], got {self.score}")
        if self.frame_id is not None and self.frame_id < 0:
            raise ValueError(f"frame_id must be nonnegative, got {self.frame_id}")
        if self.class_id < 0:
            raise ValueError(f"class_id must be nonnegative, got {self.class_id}")


@dataclass(frozen=True)
class Track:
    track_id: int
    class_id: int
    smoothed_bbox: BBox
    smoothed_score: float
    last_frame: int
    age: int = 0


@dataclass(frozen=True)
class SmoothConfig:
    decay: float = DEFAULT_DECAY
    iou_gate: float = DEFAULT_IOU_GATE
    max_age: int = DEFAULT_MAX_AGE

    def __post_init__(self):
        if not 0 < self.decay <= 1:
            raise ValueError(f"decay must lie in (0, 1], got {self.decay}")
        if not 0 < self.iou_gate < 1:
            raise ValueError(f"iou_gate must lie in (0, 1), got {self.iou_gate}")
        if self.max_age < 0:
            raise ValueError(f"max_age must be nonnegative, got {self.max_age}")


class Matching(NamedTuple):
    pairs: list[tuple[int, int]]
    unmatched_tracks: list[int]
    unmatched_detections: list[int]


def _frame_of(detections: Sequence[Detection]) -> int | None:
    frames = {d.frame_id for d in detections}
    if len(frames) > 1:
        raise ValueError(f"detections span several frames: {sorted(frames, key=str)}")
    return frames.pop() if frames else None


def associate(tracks: Sequence[Track], detections: Sequence[Detection], iou_gate: float) -> Matching:
    """Greedy one-to-one matching in descending IoU order.

    Ties in IoU go to the lower track index, then the lower detection index.
    """
    _frame_of(detections)
    candidates = []
    for ti, t in enumerate(tracks):
        for di, d in enumerate(detections):
            if t.class_id != d.class_id:
                continue
            overlap = iou(t.smoothed_bbox, d.bbox)
            if overlap >= iou_gate:
                candidates.append((-overlap, ti, di))
    candidates.sort()
    used_t, used_d, pairs = set(), set(), []
    for _, ti, di in candidates:
        if ti in used_t or di in used_d:
            continue
        used_t.add(ti)
        used_d.add(di)
        pairs.append((ti, di))
    return Matching(
        pairs=pairs,
        unmatched_tracks=[i for i in range(len(tracks)) if i not in used_t],
        unmatched_detections=[i for i in range(len(detections)) if i not in used_d],
    )


def _blend_box(prev: BBox, cur: BBox, decay: float) -> BBox:
    return BBox(*(ema_blend(p, c, decay) for p, c in zip(prev.as_tuple(), cur.as_tuple())))


class StepResult(NamedTuple):
    tracks: list[Track]
    assigned: list[Track]  # the track each input detection ended up in
    next_id: int


def smooth_step(tracks: Sequence[Track], detections: Sequence[Detection], decay: float,
                iou_gate: float, max_age: int, next_id: int | None = None) -> StepResult:
    """Advance every track by one frame.

    Matched tracks blend toward their detection, unmatched detections start
    new tracks, unmatched tracks age by one and are dropped past ``max_age``.
    New track ids count up from ``next_id`` (default: one past the largest
    live id).
    """
    SmoothConfig(decay, iou_gate, max_age)
    if next_id is None:
        next_id = max((t.track_id for t in tracks), default=-1) + 1
    frame = _frame_of(detections)
    match = associate(tracks, detections, iou_gate)
    assigned: list[Track | None] = [None] * len(detections)
    updated: dict[int, Track] = {}

    for ti, di in match.pairs:
        t, d = tracks[ti], detections[di]
        updated[ti] = replace(
            t,
            smoothed_bbox=_blend_box(t.smoothed_bbox, d.bbox, decay),
            smoothed_score=ema_blend(t.smoothed_score, d.score, decay),
            last_frame=d.frame_id if d.frame_id is not None else t.last_frame + 1,
            age=0,
        )
        assigned[di] = updated[ti]
    for ti in match.unmatched_tracks:
        t = tracks[ti]
        if t.age + 1 <= max_age:
            updated[ti] = replace(t, age=t.age + 1)

    out = [updated[i] for i in sorted(updated)]
    for di in match.unmatched_detections:
        d = detections[di]
        born = Track(
            track_id=next_id, class_id=d.class_id, smoothed_bbox=d.bbox,
            smoothed_score=d.score, last_frame=d.frame_id if d.frame_id is not None else 0,
        )
        next_id += 1
        out.append(born)
        assigned[di] = born
    return StepResult(tracks=out, assigned=assigned, next_id=next_id)


@dataclass(frozen=True)
class SmoothedDetection:
    detection: Detection
    track_id: int


def smooth_stream(frames: Sequence[Sequence[Detection]],
                  config: SmoothConfig = SmoothConfig()) -> list[list[SmoothedDetection]]:
    """Fold ``smooth_step`` over an ordered stream of frames.

    Each frame is one step; pass an empty list for frames with no
    detections so that track ages stay in frame units.
    """
    tracks: list[Track] = []
    next_id = 0
    last_frame = None
    out = []
    for frame in frames:
        fid = _frame_of(frame)
        if fid is not None:
            if last_frame is not None and fid <= last_frame:
                raise ValueError(f"frames out of order: frame {fid} after frame {last_frame}")
            last_frame = fid
        tracks, assigned, next_id = smooth_step(
            tracks, frame, config.decay, config.iou_gate, config.max_age, next_id
        )
        out.append([
            SmoothedDetection(
                detection=replace(d, bbox=t.smoothed_bbox, score=t.smoothed_score),
                track_id=t.track_id,
            )
            for d, t in zip(frame, assigned)
        ])
    return out


def group_frames(detections: Sequence[Detection], fill_gaps: bool = True) -> list[list[Detection]]:
    """Split a frame-ordered detection list into per-frame lists.

    Raises on missing or decreasing frame ids. With ``fill_gaps`` an empty
    frame is inserted for every skipped frame id.
    """
    frames: list[list[Detection]] = []
    current = None
    for i, d in enumerate(detections):
        if d.frame_id is None:
            raise ValueError(f"detection {i} has no frame_id")
        if current is not None and d.frame_id < current:
            raise ValueError(f"frames out of order: detection {i} has frame {d.frame_id} after frame {current}")
        if current is None or d.frame_id > current:
            if fill_gaps and current is not None:
                frames.extend([] for _ in range(d.frame_id - current - 1))
            frames.append([])
            current = d.frame_id
        frames[-1].append(d)
    return frames
