"""Acceptance suite: one test per criterion, each printing a PASS/FAIL line.

Run with ``pytest tests/test_acceptance.py -v`` (the lines are printed even
without ``-s``).
"""

import random
import statistics
import time
from contextlib import contextmanager
from pathlib import Path

import numpy as np

from detmath.attention import EmaAttentionState, GomParams, attention_weights, channel_attention, ema_update, gom_forward
from detmath.boxes import BBox, Variant, aiou_loss, eiou_loss, kink_distance, loss
from detmath.cli import main
from detmath.evaluation import coco_thresholds, evaluate, evaluate_records
from detmath.experiments import TrainConfig, compare_convergence, gen_tasks
from detmath.formats import read_blocks, read_jsonl
from detmath.gradcheck import random_pair
from detmath.smoothing import Detection, SmoothConfig, smooth_stream
from detmath.tensor import Tensor

from oracles import brute_force_map, central_difference
from test_evaluation import as_tuples, random_instance

DATA = Path(__file__).parent / "testdata"


@contextmanager
def criterion(capsys, label):
    """Print one PASS/FAIL line for the enclosed checks."""
    notes = []
    start = time.perf_counter()
    ok = False
    try:
        yield notes
        ok = True
    finally:
        elapsed = time.perf_counter() - start
        detail = "; ".join(notes)
        with capsys.disabled():
            print(f"\n[{'PASS' if ok else 'FAIL'}] {label} ({elapsed:.2f}s){': ' + detail if detail else ''}")


def test_1_gradient_fidelity(capsys):
    with criterion(capsys, "1 gradient fidelity") as notes:
        start = time.perf_counter()
        for variant in ("ciou", "eiou", "aiou"):
            rng = random.Random(2024)
            worst, kinks = 0.0, 0
            for _ in range(1000):
                pred, gt = random_pair(rng)
                if kink_distance(pred, gt) <= 1e-6:
                    kinks += 1
                    continue
                a = loss(variant, pred, gt).grad
                n = central_difference(variant, pred.as_tuple(), gt.as_tuple(), step=1e-6)
                scale = max(max(map(abs, a)), max(map(abs, n)), 1e-6)
                worst = max(worst, max(abs(x - y) for x, y in zip(a, n)) / scale)
            notes.append(f"{variant} max_rel_err={worst:.2e} kinks={kinks}")
            assert worst < 1e-4
            assert kinks < 50
        elapsed = time.perf_counter() - start
        assert elapsed < 5.0


def _random_box(rng):
    x, y = rng.uniform(-50, 50), rng.uniform(-50, 50)
    return BBox(x, y, x + rng.uniform(0.05, 20), y + rng.uniform(0.05, 20))


def test_2_loss_identities(capsys):
    with criterion(capsys, "2 loss identities") as notes:
        rng = random.Random(7)
        worst_sum = worst_zero = worst_shift = 0.0
        for _ in range(10_000):
            p, g = _random_box(rng), _random_box(rng)
            a, e = aiou_loss(p, g), eiou_loss(p, g)
            worst_sum = max(worst_sum, abs(a.value - (e.value + a.alpha * a.v)))
            for variant in Variant:
                worst_zero = max(worst_zero, abs(loss(variant, g, g).value))
            dx, dy = rng.uniform(-100, 100), rng.uniform(-100, 100)
            for variant in Variant:
                shifted = loss(variant, p.translate(dx, dy), g.translate(dx, dy)).value
                worst_shift = max(worst_shift, abs(shifted - loss(variant, p, g).value))
        notes.append(f"aiou-eiou-av={worst_sum:.1e} zero={worst_zero:.1e} shift={worst_shift:.1e}")
        assert worst_sum <= 1e-12
        assert worst_zero <= 1e-9
        assert worst_shift <= 1e-12
        for variant in ("ciou", "eiou", "aiou"):
            assert round(loss(variant, BBox(0, 0, 2, 2), BBox(1, 1, 3, 3)).value, 6) == 0.968254
        assert round(eiou_loss(BBox(0, 0, 4, 2), BBox(0, 0, 2, 2)).value, 6) == 0.8


def test_3_map_oracle_equivalence(capsys):
    with criterion(capsys, "3 mAP oracle equivalence") as notes:
        start = time.perf_counter()
        thresholds = coco_thresholds()
        worst = 0.0
        for seed in range(100):
            gts, preds = random_instance(seed)
            known = {g.class_id for g in gts}
            report = evaluate_records(gts, [p for p in preds if p.class_id in known], thresholds)
            per_class, _, map50, map50_95 = brute_force_map(*as_tuples(gts, preds), thresholds)
            diffs = [abs(report.map50 - map50), abs(report.map50_95 - map50_95)]
            diffs += [abs(report.per_class_ap[c][t] - per_class[c][t]) for c in per_class for t in thresholds]
            worst = max(worst, *diffs)
        report = evaluate(DATA / "eval_gt.jsonl", DATA / "eval_pred.jsonl")
        _, summary = read_blocks((DATA / "eval_golden.csv").read_text())[1]
        golden = {r["metric"]: float(r["value"]) for r in summary}
        # the committed file holds 9 significant digits; the oracle is exact
        file_diff = max(abs(report.map50 - golden["map50"]), abs(report.map50_95 - golden["map50_95"]))
        gts = [(r.image_id, r.class_id, r.bbox.as_tuple()) for r in read_jsonl(DATA / "eval_gt.jsonl")]
        preds = [(r.image_id, r.class_id, r.bbox.as_tuple(), r.score) for r in read_jsonl(DATA / "eval_pred.jsonl")]
        _, _, map50, map50_95 = brute_force_map(preds, gts, thresholds)
        oracle_diff = max(abs(report.map50 - map50), abs(report.map50_95 - map50_95))
        elapsed = time.perf_counter() - start
        notes.append(f"random max_diff={worst:.1e} golden vs oracle={oracle_diff:.1e} vs file={file_diff:.1e}")
        assert worst <= 1e-9
        assert oracle_diff <= 1e-9
        assert file_diff <= 1e-9
        assert elapsed < 10.0


def test_4_ema_contracts(capsys):
    with criterion(capsys, "4 EMA contracts") as notes:
        rng = random.Random(3)
        for _ in range(200):
            scores = tuple(rng.uniform(-500, 500) for _ in range(rng.randint(1, 10)))
            w = attention_weights(EmaAttentionState(scores, 0.3))
            assert abs(sum(w) - 1) <= 1e-12
        assert abs(sum(attention_weights(EmaAttentionState((500.0, -500.0, 499.0), 0.3))) - 1) <= 1e-12

        # dyadic values keep every operation exact, so the factor is exact
        for decay in (0.25, 0.5, 0.75, 1.0):
            old = (1.5, -0.25, 3.0, 12.0)
            new = [0.5, 0.75, -1.0, 12.0]
            after = ema_update(EmaAttentionState(old, decay), new).scores
            assert all(abs(a - n) == (1 - decay) * abs(o - n) for a, o, n in zip(after, old, new))

        decay = 0.3
        raw_total = smooth_total = 0.0
        for seed in range(10):
            r = random.Random(seed)
            frames = [[Detection(0, BBox(*(c + r.uniform(-2, 2) for c in (10.0, 10.0, 50.0, 50.0))), 0.9, f)]
                      for f in range(500)]
            out = smooth_stream(frames, SmoothConfig(decay=decay))
            raw_total += statistics.pvariance([fr[0].bbox.x1 for fr in frames[20:]])
            smooth_total += statistics.pvariance([fr[0].detection.bbox.x1 for fr in out[20:]])
        ratio, target = smooth_total / raw_total, decay / (2 - decay)
        notes.append(f"variance ratio {ratio:.4f} vs {target:.4f}")
        assert abs(ratio - target) <= 0.2 * target


def test_5_attention_contracts(capsys):
    with criterion(capsys, "5 attention contracts") as notes:
        rng = np.random.default_rng(11)
        for i in range(100):
            c = int(rng.choice([4, 8, 12]))
            shape = (c, int(rng.integers(1, 9)), int(rng.integers(1, 9)))
            params = GomParams.init(c, 4, 3 if i % 2 else 7, seed=i)
            f1 = Tensor.from_array(rng.standard_normal(shape) * rng.uniform(0.1, 100))
            f3 = gom_forward(f1, params)
            assert f3.shape == f1.shape
            assert np.all(np.abs(f3.numpy()) <= np.abs(f1.numpy()))
            ones = Tensor.full(shape, 1.0)
            assert gom_forward(f1, params, channel_map=ones, spatial_map=ones) == f1
            const = Tensor.from_array(np.broadcast_to(rng.standard_normal(c)[:, None, None], shape))
            mc = channel_attention(const, params).numpy()
            assert np.array_equal(mc, np.broadcast_to(mc[:, :1, :1], shape))
        notes.append("100 inputs")


def test_6_convergence_surrogate(capsys):
    with criterion(capsys, "6 convergence surrogate") as notes:
        start = time.perf_counter()
        config = TrainConfig(learning_rate=0.01, steps=2000)
        disjoint = compare_convergence(gen_tasks(100, 0, "disjoint"), list(Variant), config)
        skew = compare_convergence(gen_tasks(100, 0, "aspect-skew"), ["ciou", "aiou"], config)
        elapsed = time.perf_counter() - start
        rates = {s.variant.value: s.success_rate for s in disjoint.summaries}
        med_ciou, med_aiou = skew.summary_for("ciou").median_steps, skew.summary_for("aiou").median_steps
        notes.append(f"disjoint success {rates}; aspect-skew median ciou={med_ciou} aiou={med_aiou}")
        assert rates["iou"] == 0.0
        assert all(rates[v] >= 0.9 for v in ("ciou", "eiou", "aiou"))
        assert med_aiou <= med_ciou
        assert elapsed < 60.0


def _cli_outputs(tmp_path, capsys, argv, files):
    code = main(argv)
    out = capsys.readouterr().out
    return code, out, {f: (tmp_path / f).read_bytes() for f in files}


def test_7_cli_determinism(capsys, tmp_path):
    with criterion(capsys, "7 CLI determinism") as notes:
        gt, pred, stream = (str(DATA / n) for n in ("eval_gt.jsonl", "eval_pred.jsonl", "noisy_stream.jsonl"))
        commands = {
            "loss": (["loss", "--variant", "aiou", "--pred", "0,0,4,2", "--gt", "1,0,3,3", "--json"], []),
            "gradcheck": (["gradcheck", "--samples", "300", "--seed", "5"], []),
            "eval": (["eval", "--gt", gt, "--pred", pred, "--out", "{d}/map.csv"], ["map.csv"]),
            "smooth": (["smooth", "--input", stream, "--out", "{d}/smooth.jsonl"], ["smooth.jsonl"]),
            "train": (["train", "--tasks", "5", "--steps", "300", "--regime", "aspect-skew", "--out", "{d}"],
                      ["curves.csv", "summary.csv", "tasks.csv"]),
            "compare": (["compare", "--tasks", "5", "--steps", "300", "--regime", "disjoint", "--out", "{d}"],
                        ["curves.csv", "summary.csv", "tasks.csv"]),
            "attn": (["attn", "--shape", "8,6,6", "--seed", "3", "--stats"], []),
        }
        for name, (argv, files) in commands.items():
            runs = []
            for attempt in ("a", "b"):
                d = tmp_path / name / attempt
                d.mkdir(parents=True)
                runs.append(_cli_outputs(d, capsys, [x.replace("{d}", str(d)) for x in argv], files))
            assert runs[0][0] == 0, name
            assert runs[0] == runs[1], name
        notes.append(f"{len(commands)} commands")
