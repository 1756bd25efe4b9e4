"""Axis-aligned boxes and the IoU family of regression losses.

Every loss comes with its analytic gradient with respect to the predicted
box corners ``(x1, y1, x2, y2)``. The gradients are written out by hand
(no autodiff) and are checked against finite differences in the tests.

Subgradient conventions at non-smooth points:

* enclosing box edge ties (``x1 == gt.x1`` etc.) take the branch where the
  predicted box determines the enclosure;
* intersection edge ties take the midpoint of the two one-sided
  derivatives, which makes the gradient vanish at ``pred == gt``;
* an empty intersection (including edge contact) contributes no gradient.

The aspect trade-off weight ``alpha`` is held constant when differentiating.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field
from typing import Sequence

_FOUR_OVER_PI2 = 4.0 / math.pi ** 2


class Variant(str, enum.Enum):
    IOU = "iou"
    CIOU = "ciou"
    EIOU = "eiou"
    AIOU = "aiou"

    @classmethod
    def parse(cls, name) -> "Variant":
        if isinstance(name, cls):
            return name
        try:
            return cls(str(name).lower())
        except ValueError:
            valid = ", ".join(v.value for v in cls)
            raise ValueError(f"unknown loss variant {name!r} (expected one of {valid})") from None


@dataclass(frozen=True)
class BBox:
    """Corner-form box; width and height must be strictly positive."""

    x1: float
    y1: float
    x2: float
    y2: float

    def __post_init__(self):
        coords = (self.x1, self.y1, self.x2, self.y2)
        if not all(math.isfinite(c) for c in coords):
            raise ValueError(f"box {coords} has non-finite coordinates")
        if not (self.x2 > self.x1 and self.y2 > self.y1):
            raise ValueError(f"degenerate box {coords}: need x2 > x1 and y2 > y1")

    @classmethod
    def from_center(cls, cx, cy, w, h) -> "BBox":
        return cls(cx - w / 2, cy - h / 2, cx + w / 2, cy + h / 2)

    @classmethod
    def parse(cls, text: str) -> "BBox":
        parts = [p for p in text.replace(" ", "").split(",") if p]
        if len(parts) != 4:
            raise ValueError(f"expected 4 comma-separated numbers, got {text!r}")
        return cls(*(float(p) for p in parts))

    @property
    def width(self) -> float:
        return self.x2 - self.x1

    @property
    def height(self) -> float:
        return self.y2 - self.y1

    @property
    def center(self) -> tuple[float, float]:
        return ((self.x1 + self.x2) / 2, (self.y1 + self.y2) / 2)

    @property
    def area(self) -> float:
        return self.width * self.height

    def as_tuple(self) -> tuple[float, float, float, float]:
        return (self.x1, self.y1, self.x2, self.y2)

    def translate(self, dx: float, dy: float) -> "BBox":
        return BBox(self.x1 + dx, self.y1 + dy, self.x2 + dx, self.y2 + dy)

    def scale(self, s: float) -> "BBox":
        return BBox(self.x1 * s, self.y1 * s, self.x2 * s, self.y2 * s)


@dataclass(frozen=True)
class EnclosureGeometry:
    c_w: float
    c_h: float
    rho2_center: float

    @property
    def c2(self) -> float:
        return self.c_w ** 2 + self.c_h ** 2

    @property
    def c(self) -> float:
        return math.hypot(self.c_w, self.c_h)


@dataclass(frozen=True)
class LossReport:
    variant: Variant
    value: float
    iou: float
    grad: tuple[float, float, float, float]
    terms: dict[str, float] = field(default_factory=dict)
    alpha: float = 0.0
    v: float = 0.0


TERM_NAMES = ("overlap", "center", "aspect", "width", "height")


def _coords(box) -> tuple[float, float, float, float]:
    if isinstance(box, BBox):
        x1, y1, x2, y2 = box.as_tuple()
    else:
        x1, y1, x2, y2 = (float(c) for c in box)
    if not (x2 > x1 and y2 > y1):
        raise ValueError(f"degenerate box {(x1, y1, x2, y2)}: zero or negative area")
    return x1, y1, x2, y2


def iou(a, b) -> float:
    ax1, ay1, ax2, ay2 = _coords(a)
    bx1, by1, bx2, by2 = _coords(b)
    iw = min(ax2, bx2) - max(ax1, bx1)
    ih = min(ay2, by2) - max(ay1, by1)
    if iw <= 0 or ih <= 0:
        return 0.0
    inter = iw * ih
    union = (ax2 - ax1) * (ay2 - ay1) + (bx2 - bx1) * (by2 - by1) - inter
    return inter / union


def enclosure(a, b) -> EnclosureGeometry:
    ax1, ay1, ax2, ay2 = _coords(a)
    bx1, by1, bx2, by2 = _coords(b)
    dx = (ax1 + ax2 - bx1 - bx2) / 2
    dy = (ay1 + ay2 - by1 - by2) / 2
    return EnclosureGeometry(
        c_w=max(ax2, bx2) - min(ax1, bx1),
        c_h=max(ay2, by2) - min(ay1, by1),
        rho2_center=dx * dx + dy * dy,
    )


def aspect_consistency(pred, gt) -> float:
    """The CIoU aspect term ``v``."""
    _, _, w, h = _wh(_coords(pred))
    _, _, gw, gh = _wh(_coords(gt))
    d = math.atan(gw / gh) - math.atan(w / h)
    return _FOUR_OVER_PI2 * d * d


def _wh(c):
    return c[0], c[1], c[2] - c[0], c[3] - c[1]


def _edge_grads(lo_p, hi_p, lo_g, hi_g):
    """Overlap length along one axis and its derivative wrt (lo_p, hi_p)."""
    lo = max(lo_p, lo_g)
    hi = min(hi_p, hi_g)
    length = hi - lo
    if length <= 0:
        return 0.0, 0.0, 0.0
    d_lo = 1.0 if lo_p > lo_g else (0.5 if lo_p == lo_g else 0.0)
    d_hi = 1.0 if hi_p < hi_g else (0.5 if hi_p == hi_g else 0.0)
    return length, -d_lo, d_hi


def _loss(pred, gt, variant: Variant, alpha: float | None = None) -> LossReport:
    x1, y1, x2, y2 = _coords(pred)
    g1, h1, g2, h2 = _coords(gt)
    w, h = x2 - x1, y2 - y1
    gw, gh = g2 - g1, h2 - h1

    # intersection over union
    iw, diw_x1, diw_x2 = _edge_grads(x1, x2, g1, g2)
    ih, dih_y1, dih_y2 = _edge_grads(y1, y2, h1, h2)
    inter = iw * ih
    d_inter = (diw_x1 * ih, dih_y1 * iw, diw_x2 * ih, dih_y2 * iw)
    d_area = (-h, -w, h, w)
    union = w * h + gw * gh - inter
    iou_val = inter / union
    u2 = union * union
    d_iou = tuple((di * union - inter * (da - di)) / u2 for di, da in zip(d_inter, d_area))

    terms = dict.fromkeys(TERM_NAMES, 0.0)
    terms["overlap"] = 1.0 - iou_val
    grad = [-g for g in d_iou]
    alpha_used = 0.0
    v = 0.0

    if variant is not Variant.IOU:
        # enclosing box; ties resolved toward the predicted box
        ex1_p = 1.0 if x1 <= g1 else 0.0
        ex2_p = 1.0 if x2 >= g2 else 0.0
        ey1_p = 1.0 if y1 <= h1 else 0.0
        ey2_p = 1.0 if y2 >= h2 else 0.0
        cw = max(x2, g2) - min(x1, g1)
        ch = max(y2, h2) - min(y1, h1)
        d_cw = (-ex1_p, 0.0, ex2_p, 0.0)
        d_ch = (0.0, -ey1_p, 0.0, ey2_p)
        c2 = cw * cw + ch * ch
        d_c2 = tuple(2 * cw * a + 2 * ch * b for a, b in zip(d_cw, d_ch))

        dx = (x1 + x2 - g1 - g2) / 2
        dy = (y1 + y2 - h1 - h2) / 2
        rho2 = dx * dx + dy * dy
        d_rho2 = (dx, dy, dx, dy)
        terms["center"] = rho2 / c2
        for i in range(4):
            grad[i] += (d_rho2[i] * c2 - rho2 * d_c2[i]) / (c2 * c2)

        if variant in (Variant.CIOU, Variant.AIOU):
            diff = math.atan(gw / gh) - math.atan(w / h)
            v = _FOUR_OVER_PI2 * diff * diff
            if alpha is None:
                alpha = v / ((1.0 - iou_val) + v) if v > 0 else 0.0
            alpha_used = alpha
            terms["aspect"] = alpha * v
            # d atan(w/h) = (h dw - w dh) / (w^2 + h^2)
            k = -2 * _FOUR_OVER_PI2 * diff / (w * w + h * h)
            d_v = (k * -h, k * w, k * h, k * -w)
            for i in range(4):
                grad[i] += alpha * d_v[i]

        if variant in (Variant.EIOU, Variant.AIOU):
            ew, eh = w - gw, h - gh
            terms["width"] = ew * ew / (cw * cw)
            terms["height"] = eh * eh / (ch * ch)
            d_w = (-1.0, 0.0, 1.0, 0.0)
            d_h = (0.0, -1.0, 0.0, 1.0)
            for i in range(4):
                grad[i] += 2 * ew * d_w[i] / (cw * cw) - 2 * ew * ew * d_cw[i] / cw ** 3
                grad[i] += 2 * eh * d_h[i] / (ch * ch) - 2 * eh * eh * d_ch[i] / ch ** 3

    value = 0.0
    for name in TERM_NAMES:
        value += terms[name]
    return LossReport(
        variant=variant,
        value=value,
        iou=iou_val,
        grad=tuple(grad),
        terms=terms,
        alpha=alpha_used,
        v=v,
    )


def iou_loss(pred, gt) -> LossReport:
    return _loss(pred, gt, Variant.IOU)


def ciou_loss(pred, gt) -> LossReport:
    """1 - IoU + rho^2/c^2 + alpha*v."""
    return _loss(pred, gt, Variant.CIOU)


def eiou_loss(pred, gt) -> LossReport:
    """1 - IoU + center, width and height distances over the enclosing box."""
    return _loss(pred, gt, Variant.EIOU)


def aiou_loss(pred, gt) -> LossReport:
    """EIoU penalties plus the CIoU aspect term alpha*v."""
    return _loss(pred, gt, Variant.AIOU)


def loss(variant, pred, gt) -> LossReport:
    return _loss(pred, gt, Variant.parse(variant))


def loss_value(variant, pred: Sequence[float], gt, alpha: float | None = None) -> float:
    """Scalar loss with an optional frozen ``alpha`` (used by finite differences)."""
    return _loss(pred, gt, Variant.parse(variant), alpha=alpha).value


def numeric_grad(variant, pred, gt, step: float = 1e-6) -> tuple[float, ...]:
    """Central finite differences of the loss, with alpha frozen at ``pred``."""
    variant = Variant.parse(variant)
    base = list(_coords(pred))
    alpha = _loss(base, gt, variant).alpha
    out = []
    for i in range(4):
        hi = base.copy()
        lo = base.copy()
        hi[i] += step
        lo[i] -= step
        out.append((loss_value(variant, hi, gt, alpha) - loss_value(variant, lo, gt, alpha)) / (2 * step))
    return tuple(out)


def kink_distance(pred, gt) -> float:
    """Distance from the nearest coordinate where some edge comparison flips."""
    x1, y1, x2, y2 = _coords(pred)
    g1, h1, g2, h2 = _coords(gt)
    return min(
        abs(x1 - g1), abs(x2 - g2), abs(y1 - h1), abs(y2 - h2),
        abs(x2 - g1), abs(x1 - g2), abs(y2 - h1), abs(y1 - h2),
    )
