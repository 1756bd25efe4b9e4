"""JSONL detection records and CSV tables.

One JSON object per line::

    {"image_id": "img0", "frame_id": 3, "class_id": 1,
     "bbox": [x1, y1, x2, y2], "score": 0.87, "track_id": 4}

``score`` is required for predictions and absent for ground truth,
``frame_id`` is optional, and ``track_id`` only appears in smoother output.
"""

from __future__ import annotations

import csv
import io
import json
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Sequence

from .boxes import BBox


class FormatError(ValueError):
    def __init__(self, message: str, path: str | None = None, line: int | None = None):
        self.path = path
        self.line = line
        where = ""
        if path is not None:
            where = f"{path}:"
        if line is not None:
            where += f"{line}:"
        super().__init__(f"{where} {message}" if where else message)


@dataclass(frozen=True)
class DetectionFileRecord:
    image_id: str
    class_id: int
    bbox: BBox
    score: float | None = None
    frame_id: int | None = None
    track_id: int | None = None

    @classmethod
    def from_dict(cls, obj: dict) -> "DetectionFileRecord":
        if not isinstance(obj, dict):
            raise ValueError("record is not a JSON object")
        missing = [k for k in ("class_id", "bbox") if k not in obj]
        if missing:
            raise ValueError(f"missing field(s): {', '.join(missing)}")
        bbox = obj["bbox"]
        if not isinstance(bbox, list) or len(bbox) != 4:
            raise ValueError(f"bbox must be a list of 4 numbers, got {bbox!r}")
        score = obj.get("score")
        if score is not None:
            score = float(score)
            if not (0.0 <= score <= 1.0):
                raise ValueError(f"score must lie in [0, 1], got {score}")
        return cls(
            image_id=str(obj.get("image_id", "")),
            class_id=_int(obj["class_id"], "class_id"),
            bbox=BBox(*(float(c) for c in bbox)),
            score=score,
            frame_id=None if obj.get("frame_id") is None else _int(obj["frame_id"], "frame_id"),
            track_id=None if obj.get("track_id") is None else _int(obj["track_id"], "track_id"),
        )

    def to_dict(self) -> dict:
        out = {"image_id": self.image_id}
        if self.frame_id is not None:
            out["frame_id"] = self.frame_id
        out["class_id"] = self.class_id
        out["bbox"] = list(self.bbox.as_tuple())
        if self.score is not None:
            out["score"] = self.score
        if self.track_id is not None:
            out["track_id"] = self.track_id
        return out


def _int(value, name: str) -> int:
    if isinstance(value, bool) or not isinstance(value, (int, float)) or value != int(value):
        raise ValueError(f"{name} must be an integer, got {value!r}")
    if value < 0:
        raise ValueError(f"{name} must be nonnegative, got {value}")
    return int(value)


def parse_jsonl(text: str, path: str | None = None, require_score: bool = False) -> list[DetectionFileRecord]:
    records = []
    for lineno, line in enumerate(text.splitlines(), start=1):
        if not line.strip():
            continue
        try:
            record = DetectionFileRecord.from_dict(json.loads(line))
            if require_score and record.score is None:
                raise ValueError("prediction record has no score")
        except (ValueError, TypeError) as exc:
            raise FormatError(str(exc), path, lineno) from None
        records.append(record)
    return records


def read_jsonl(path, require_score: bool = False) -> list[DetectionFileRecord]:
    path = Path(path)
    return parse_jsonl(path.read_text(), str(path), require_score)


def dumps_jsonl(records: Iterable[DetectionFileRecord]) -> str:
    return "".join(json.dumps(r.to_dict()) + "\n" for r in records)


def write_jsonl(path, records: Iterable[DetectionFileRecord]) -> None:
    Path(path).write_text(dumps_jsonl(records))


def fmt(x) -> str:
    """Numbers with 9 significant digits; everything else via str()."""
    if isinstance(x, float):
        return f"{x:.9g}"
    return str(x)


def write_table(columns: Sequence[str], rows: Iterable[Sequence]) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(columns)
    for row in rows:
        writer.writerow([fmt(x) for x in row])
    return buf.getvalue()


def read_table(text: str) -> tuple[list[str], list[dict[str, str]]]:
    """First CSV block: header plus rows, stopping at the first blank line."""
    lines = []
    for line in text.splitlines():
        if not line.strip():
            break
        lines.append(line)
    reader = csv.DictReader(lines)
    rows = list(reader)
    return list(reader.fieldnames or []), rows


def read_blocks(text: str) -> list[tuple[list[str], list[dict[str, str]]]]:
    """All blank-line separated CSV blocks in ``text``."""
    blocks, current = [], []
    for line in text.splitlines() + [""]:
        if line.strip():
            current.append(line)
        elif current:
            blocks.append(read_table("\n".join(current)))
            current = []
    return blocks

