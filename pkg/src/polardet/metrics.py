"""Detection metrics: IoU matching, per-class AP, weighted mAP, error-rate evolution.

Average precision is accumulated in rational arithmetic. Precision and
recall are ratios of small integers, so the interpolated area under the
curve has an exact value; computing it exactly makes AP independent of
summation order and reproducible bit for bit.
"""

import math
from dataclasses import dataclass, field
from fractions import Fraction

from .dataset import BoundingBox
from .exceptions import BaselinePerfectError, PolarDetError, ZeroInstancesError

AP_MODES = ("allpoint", "11point")


@dataclass(frozen=True)
class DetectionRecord:
    """One scored box from an external detector.

    ``detection_id`` only breaks score ties; any totally ordered value works
    as long as all records of one evaluation use the same type.
    """

    image_id: str
    box: BoundingBox
    class_label: str
    score: float
    detection_id: object = 0

    def __post_init__(self):
        if not (isinstance(self.score, (int, float)) and 0.0 <= self.score <= 1.0):
            raise PolarDetError(f"detection score must lie in [0, 1], got {self.score!r}")
        if not self.box.is_valid:
            raise PolarDetError(f"invalid detection box {self.box.to_list()}: {self.box.problems()}")


@dataclass(frozen=True)
class APResult:
    class_label: str
    ap: float
    precision: tuple = ()
    recall: tuple = ()
    n_gt: int = 0
    n_det: int = 0
    n_tp: int = 0
    flags: tuple = field(default=())

    def to_dict(self):
        return {
            "class": self.class_label,
            "ap": self.ap,
            "n_gt": self.n_gt,
            "n_det": self.n_det,
            "n_tp": self.n_tp,
            "flags": list(self.flags),
            "curve": {"precision": list(self.precision), "recall": list(self.recall)},
        }


def iou(a, b):
    """Intersection over union of two boxes in continuous coordinates."""
    iw = min(a.x_max, b.x_max) - max(a.x_min, b.x_min)
    ih = min(a.y_max, b.y_max) - max(a.y_min, b.y_min)
    if iw <= 0 or ih <= 0:
        return 0.0
    inter = iw * ih
    union = a.area + b.area - inter
    return min(inter / union, 1.0)


def ranked(dets):
    """Detections in evaluation order: descending score, then ascending id."""
    return sorted(dets, key=lambda d: (-d.score, d.detection_id))


def match_detections(gt, dets, iou_thresh=0.5):
    """Greedy matching of ranked detections to ground truth boxes.

    Each detection claims its highest-IoU box in the same image (first box
    wins IoU ties). It is a true positive when that IoU reaches
    ``iou_thresh`` and the box is still unclaimed; duplicates are false
    positives. Returns ``(ranked_detections, is_tp)``.
    """
    by_image = {}
    for a in gt:
        by_image.setdefault(a.image_id, []).append(a.box)
    claimed = {k: [False] * len(v) for k, v in by_image.items()}
    order = ranked(dets)
    is_tp = []
    for d in order:
        boxes = by_image.get(d.image_id, ())
        best, best_iou = -1, -1.0
        for k, box in enumerate(boxes):
            v = iou(d.box, box)
            if v > best_iou:
                best, best_iou = k, v
        if best >= 0 and best_iou >= iou_thresh and not claimed[d.image_id][best]:
            claimed[d.image_id][best] = True
            is_tp.append(True)
        else:
            is_tp.append(False)
    return order, is_tp


def _interpolated_ap(is_tp, n_gt, mode):
    tp = fp = 0
    prec, rec = [], []
    for hit in is_tp:
        tp += hit
        fp += not hit
        prec.append(Fraction(tp, tp + fp))
        rec.append(Fraction(tp, n_gt))
    if mode == "allpoint":
        # each true positive adds 1/n_gt of recall at the envelope precision
        envelope = Fraction(0)
        total = Fraction(0)
        for hit, p in zip(reversed(is_tp), reversed(prec)):
            envelope = max(envelope, p)
            if hit:
                total += envelope
        ap = total / n_gt
    else:
        ap = Fraction(0)
        for t in range(11):
            level = Fraction(t, 10)
            ap += max((p for p, r in zip(prec, rec) if r >= level), default=Fraction(0))
        ap /= 11
    return ap, prec, rec


def average_precision(gt, dets, class_label, iou_thresh=0.5, mode="allpoint"):
    """Average precision of one class.

    Parameters
    ----------
    gt : iterable of Annotation
    dets : iterable of DetectionRecord
        Records of other classes are ignored.
    class_label : str
    iou_thresh : float, default=0.5
    mode : {"allpoint", "11point"}
        All-point interpolation integrates the precision envelope over
        recall; 11-point averages it at recall 0, 0.1, ..., 1.

    Returns
    -------
    APResult
        With flag ``"no_ground_truth"`` (AP reported as 0) when the class has
        no ground truth boxes.
    """
    if mode not in AP_MODES:
        raise PolarDetError(f"mode must be one of {AP_MODES}, got {mode!r}")
    if not 0.0 < iou_thresh <= 1.0:
        raise PolarDetError(f"iou_thresh must lie in (0, 1], got {iou_thresh!r}")
    gt = [a for a in gt if a.class_label == class_label]
    dets = [d for d in dets if d.class_label == class_label]
    _, is_tp = match_detections(gt, dets, iou_thresh)
    if not gt:
        return APResult(class_label, 0.0, n_det=len(dets), flags=("no_ground_truth",))
    ap, prec, rec = _interpolated_ap(is_tp, len(gt), mode)
    return APResult(
        class_label,
        float(ap),
        precision=tuple(float(p) for p in prec),
        recall=tuple(float(r) for r in rec),
        n_gt=len(gt),
        n_det=len(dets),
        n_tp=sum(is_tp),
    )


def weighted_map(ap_person, ap_car, n_person, n_car):
    """Instance-weighted mean of the person and car APs."""
    return weighted_mean_ap({"person": ap_person, "car": ap_car}, {"person": n_person, "car": n_car})


def weighted_mean_ap(aps, counts):
    """Mean of ``aps[c]`` weighted by ``counts[c]`` over the keys of ``aps``."""
    total = 0
    acc = 0.0
    for c, ap in aps.items():
        n = counts.get(c, 0)
        if n < 0:
            raise PolarDetError(f"instance count for {c!r} is negative")
        if not 0.0 <= ap <= 1.0:
            raise PolarDetError(f"AP for {c!r} must lie in [0, 1], got {ap!r}")
        total += n
        acc += n * ap
    if total == 0:
        raise ZeroInstancesError("weighted mAP needs at least one ground-truth instance")
    return acc / total


def error_rate_evolution(ap_baseline, ap_new):
    """Relative reduction of the error ``1 - AP`` versus a baseline, in percent.

    Positive means ``ap_new`` improves on ``ap_baseline``; 100 means a
    perfect detector.
    """
    if ap_baseline == 1:
        raise BaselinePerfectError("baseline AP is 1; no error left to reduce")
    if not (math.isfinite(ap_baseline) and ap_baseline < 1):
        raise PolarDetError(f"baseline AP must be below 1, got {ap_baseline!r}")
    return (ap_new - ap_baseline) / (1.0 - ap_baseline) * 100.0
