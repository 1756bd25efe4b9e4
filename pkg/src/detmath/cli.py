"""Command-line entry point.

Exit codes: 0 success, 1 a check failed, 2 usage or input error.
"""

from __future__ import annotations

import argparse
import json
import sys
from dataclasses import replace
from pathlib import Path

import numpy as np

from . import attention, evaluation, experiments
from .boxes import BBox, Variant, loss
from .formats import DetectionFileRecord, FormatError, dumps_jsonl, fmt, read_jsonl
from .gradcheck import gradient_check
from .smoothing import Detection, SmoothConfig, group_frames, smooth_stream
from .tensor import Tensor


class InputError(Exception):
    pass


def _box(text: str) -> BBox:
    try:
        return BBox.parse(text)
    except ValueError as exc:
        raise InputError(f"invalid box {text!r}: {exc}") from None


def cmd_loss(args) -> int:
    report = loss(args.variant, _box(args.pred), _box(args.gt))
    if args.json:
        payload = {
            "variant": report.variant.value,
            "value": report.value,
            "iou": report.iou,
            "terms": report.terms,
            "alpha": report.alpha,
            "v": report.v,
            "grad": list(report.grad),
        }
        print(json.dumps(payload))
        return 0
    print(f"variant  {report.variant.value}")
    print(f"value    {fmt(report.value)}")
    print(f"iou      {fmt(report.iou)}")
    for name, value in report.terms.items():
        print(f"  {name:<8} {fmt(value)}")
    print(f"alpha    {fmt(report.alpha)}")
    print(f"v        {fmt(report.v)}")
    print("grad     " + " ".join(fmt(g) for g in report.grad))
    return 0


def cmd_gradcheck(args) -> int:
    if args.samples < 1:
        raise InputError("--samples must be >= 1")
    summary = gradient_check(args.variant, args.samples, args.seed, args.tol)
    print("\n".join(summary.lines()))
    return 0 if summary.passed else 1


def cmd_eval(args) -> int:
    thresholds = evaluation.parse_thresholds(args.thresholds)
    report = evaluation.evaluate(args.gt, args.pred, thresholds)
    text = report.to_csv()
    if args.out:
        Path(args.out).write_text(text)
    else:
        sys.stdout.write(text)
    return 0


def cmd_smooth(args) -> int:
    config = SmoothConfig(decay=args.decay, iou_gate=args.gate, max_age=args.max_age)
    records = read_jsonl(args.input)
    detections = []
    for i, r in enumerate(records):
        if r.score is None:
            raise InputError(f"{args.input}: record {i + 1} has no score")
        detections.append(Detection(class_id=r.class_id, bbox=r.bbox, score=r.score,
                                    frame_id=r.frame_id, image_id=r.image_id))
    frames = group_frames(detections)
    smoothed = [s for frame in smooth_stream(frames, config) for s in frame]
    out = [
        replace(r, bbox=s.detection.bbox, score=s.detection.score, track_id=s.track_id)
        for r, s in zip(records, smoothed)
    ]
    text = dumps_jsonl(out)
    if args.out:
        Path(args.out).write_text(text)
    else:
        sys.stdout.write(text)
    return 0


def _tasks(args) -> list[experiments.RegressionTask]:
    if args.gt or args.init:
        if not (args.gt and args.init):
            raise InputError("--gt and --init must be given together")
        return [experiments.RegressionTask(gt=_box(args.gt), init=_box(args.init), seed=args.seed)]
    return experiments.gen_tasks(args.tasks, args.seed, args.regime)


def _config(args, variant) -> experiments.TrainConfig:
    return experiments.TrainConfig(
        variant=variant, learning_rate=args.lr, steps=args.steps, seed=args.seed,
        success_iou=args.success_iou, backtrack=args.backtrack,
    )


def _write_outputs(out_dir, records, summaries) -> None:
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    (out / "curves.csv").write_text(experiments.curve_emit(records))
    (out / "summary.csv").write_text(experiments.summary_csv(summaries))
    (out / "tasks.csv").write_text(experiments.tasks_csv(records))


def _print_summaries(summaries) -> None:
    sys.stdout.write(experiments.summary_csv(summaries))


def cmd_train(args) -> int:
    tasks = _tasks(args)
    config = _config(args, args.loss)
    records = [experiments.train_box(t, config) for t in tasks]
    summaries = [experiments.summarize(config.variant, records)]
    _write_outputs(args.out, records, summaries)
    _print_summaries(summaries)
    return 0


def cmd_compare(args) -> int:
    variants = [Variant.parse(v) for v in args.losses.split(",") if v.strip()]
    if not variants:
        raise InputError("--losses is empty")
    tasks = _tasks(args)
    base = _config(args, variants[0])
    if len(variants) == 1:
        records = [experiments.train_box(t, base) for t in tasks]
        summaries = [experiments.summarize(variants[0], records)]
    else:
        report = experiments.compare_convergence(tasks, variants, base)
        records, summaries = report.records, report.summaries
    _write_outputs(args.out, records, summaries)
    _print_summaries(summaries)
    return 0


def cmd_attn(args) -> int:
    try:
        shape = tuple(int(p) for p in args.shape.split(","))
    except ValueError:
        raise InputError(f"--shape must be C,H,W integers, got {args.shape!r}") from None
    if len(shape) != 3 or min(shape) < 1:
        raise InputError(f"--shape must be three positive integers, got {args.shape!r}")
    c = shape[0]
    if c % args.reduction:
        raise InputError(f"channels {c} not divisible by reduction ratio {args.reduction}")
    params = attention.GomParams.init(c, args.reduction, args.kernel, seed=args.seed)
    rng = np.random.default_rng(args.seed + 1)
    f1 = Tensor.from_array(rng.standard_normal(shape))
    f3 = attention.gom_forward(f1, params)
    a1, a3 = f1.numpy(), f3.numpy()
    print("shape " + ",".join(str(d) for d in f3.shape))
    if args.stats:
        for name, a in (("input", a1), ("output", a3)):
            print(f"{name:<6} min {fmt(float(a.min()))} max {fmt(float(a.max()))} "
                  f"mean {fmt(float(a.mean()))} max_abs {fmt(float(np.abs(a).max()))}")
    ok = f3.shape == f1.shape and bool(np.all(np.abs(a3) <= np.abs(a1)))
    print(f"shape_preserved {f3.shape == f1.shape}")
    print(f"bounded {ok}")
    return 0 if ok else 1


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="detmath", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)
    variants = [v.value for v in Variant]

    p = sub.add_parser("loss", help="evaluate one loss on a box pair")
    p.add_argument("--variant", choices=variants, default="aiou")
    p.add_argument("--pred", required=True, help="x1,y1,x2,y2")
    p.add_argument("--gt", required=True, help="x1,y1,x2,y2")
    p.add_argument("--json", action="store_true")
    p.set_defaults(func=cmd_loss)

    p = sub.add_parser("gradcheck", help="finite-difference check of loss gradients")
    p.add_argument("--samples", type=int, default=1000)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--variant", choices=variants, default="aiou")
    p.add_argument("--tol", type=float, default=1e-4)
    p.set_defaults(func=cmd_gradcheck)

    p = sub.add_parser("eval", help="mAP50 / mAP50-95 from JSONL files")
    p.add_argument("--gt", required=True)
    p.add_argument("--pred", required=True)
    p.add_argument("--thresholds", default="0.5:0.95:0.05")
    p.add_argument("--out")
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("smooth", help="EMA-smooth a detection stream")
    p.add_argument("--input", required=True)
    p.add_argument("--decay", type=float, default=SmoothConfig.decay)
    p.add_argument("--gate", type=float, default=SmoothConfig.iou_gate)
    p.add_argument("--max-age", type=int, default=SmoothConfig.max_age)
    p.add_argument("--out")
    p.set_defaults(func=cmd_smooth)

    for name, func in (("train", cmd_train), ("compare", cmd_compare)):
        p = sub.add_parser(name, help="gradient-descent box regression" if name == "train"
                           else "compare loss variants on the same tasks")
        if name == "train":
            p.add_argument("--loss", choices=variants, default="aiou")
        else:
            p.add_argument("--losses", default="iou,ciou,eiou,aiou")
        p.add_argument("--regime", choices=experiments.REGIMES, default="overlap")
        p.add_argument("--tasks", type=int, default=100)
        p.add_argument("--steps", type=int, default=2000)
        p.add_argument("--lr", type=float, default=0.01)
        p.add_argument("--seed", type=int, default=0)
        p.add_argument("--success-iou", type=float, default=0.9)
        p.add_argument("--backtrack", action="store_true")
        p.add_argument("--gt", help="explicit target box (with --init)")
        p.add_argument("--init", help="explicit starting box (with --gt)")
        p.add_argument("--out", required=True, help="output directory")
        p.set_defaults(func=func)

    p = sub.add_parser("attn", help="run the attention forward pass on random input")
    p.add_argument("--shape", required=True, help="C,H,W")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--reduction", type=int, default=attention.DEFAULT_REDUCTION)
    p.add_argument("--kernel", type=int, default=attention.DEFAULT_KERNEL)
    p.add_argument("--stats", action="store_true")
    p.set_defaults(func=cmd_attn)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (InputError, FormatError, ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
