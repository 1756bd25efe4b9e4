"""Regenerate the committed test fixtures under tests/testdata/.

The golden evaluation CSV comes from the brute-force oracle in
tests/oracles.py, never from the library evaluator.
"""

import random
import sys
from pathlib import Path

ROOT = Path(__file__).resolve().parents[1]
sys.path.insert(0, str(ROOT / "tests"))

from oracles import brute_force_map  # noqa: E402

from detmath.formats import DetectionFileRecord, dumps_jsonl, write_table  # noqa: E402
from detmath.boxes import BBox  # noqa: E402

DATA = ROOT / "tests" / "testdata"
THRESHOLDS = tuple(round(0.5 + 0.05 * i, 10) for i in range(10))

GT = [
    ("img0", 0, (0, 0, 10, 10)),
    ("img0", 1, (20, 20, 30, 35)),
    ("img1", 0, (5, 5, 15, 15)),
    ("img1", 0, (30, 30, 40, 40)),
    ("img2", 1, (0, 0, 8, 8)),
]

PRED = [
    ("img0", 0, (1, 1, 10, 11), 0.9),
    ("img0", 0, (0, 0, 9, 9), 0.6),
    ("img0", 1, (21, 22, 30, 34), 0.8),
    ("img1", 0, (5, 6, 15, 16), 0.85),
    ("img1", 0, (31, 29, 42, 41), 0.4),
    ("img1", 0, (50, 50, 60, 60), 0.7),
    ("img2", 1, (1, 0, 9, 9.5), 0.75),
    ("img2", 1, (0, 0, 4, 4), 0.3),
    ("img2", 0, (0, 0, 8, 8), 0.5),
    ("img0", 1, (0, 0, 5, 5), 0.2),
]


def eval_fixture():
    gt = [DetectionFileRecord(i, c, BBox(*map(float, b))) for i, c, b in GT]
    pred = [DetectionFileRecord(i, c, BBox(*map(float, b)), s) for i, c, b, s in PRED]
    (DATA / "eval_gt.jsonl").write_text(dumps_jsonl(gt))
    (DATA / "eval_pred.jsonl").write_text(dumps_jsonl(pred))

    per_class, _, map50, map50_95 = brute_force_map(
        [(i, c, tuple(map(float, b)), s) for i, c, b, s in PRED],
        [(i, c, tuple(map(float, b))) for i, c, b in GT],
        THRESHOLDS,
    )
    rows = [(c, f"{t:.2f}", per_class[c][t]) for c in sorted(per_class) for t in THRESHOLDS]
    text = write_table(("class", "threshold", "ap"), rows) + "\n" + write_table(
        ("metric", "value"), [("map50", map50), ("map50_95", map50_95)]
    )
    (DATA / "eval_golden.csv").write_text(text)


def noisy_stream(frames=100, amplitude=2.0, seed=7):
    rng = random.Random(seed)
    base = (10.0, 10.0, 50.0, 50.0)
    records = []
    for f in range(frames):
        box = BBox(*(c + rng.uniform(-amplitude, amplitude) for c in base))
        score = min(1.0, max(0.0, 0.9 + rng.uniform(-0.05, 0.05)))
        records.append(DetectionFileRecord("cam0", 0, box, score, frame_id=f))
    (DATA / "noisy_stream.jsonl").write_text(dumps_jsonl(records))


if __name__ == "__main__":
    DATA.mkdir(parents=True, exist_ok=True)
    eval_fixture()
    noisy_stream()
    print(f"fixtures written to {DATA}")
