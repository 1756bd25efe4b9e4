"""Detection maths: IoU-family losses with analytic gradients, global and
EMA attention forward passes, detection smoothing, and mAP evaluation."""

from .boxes import BBox, LossReport, Variant, aiou_loss, ciou_loss, eiou_loss, iou, loss

__all__ = ["BBox", "LossReport", "Variant", "aiou_loss", "ciou_loss", "eiou_loss", "iou", "loss"]
__version__ = "0.1.0"
