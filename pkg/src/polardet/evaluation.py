"""Detector-agnostic evaluation of detection files against a manifest.

Detection files are JSON arrays of
``{"image_id": str, "class": str, "bbox": [x1, y1, x2, y2], "score": float}``
with an optional ``"id"``. Reports are canonical JSON: keys sorted, classes
sorted, so identical evaluations give identical bytes whatever the input
record order.
"""

import csv
import io
import json
from dataclasses import dataclass, field
from pathlib import Path

import jsonschema
from sklearn.base import BaseEstimator
from sklearn.utils.validation import check_is_fitted

from . import schemas
from .dataset import BoundingBox, DatasetManifest
from .exceptions import BaselinePerfectError, PolarDetError, SchemaError, ZeroInstancesError
from .metrics import AP_MODES, APResult, DetectionRecord, average_precision, error_rate_evolution, weighted_mean_ap

MAP_CLASSES = ("person", "car")

_RECORD_VALIDATOR = jsonschema.Draft7Validator(schemas.DETECTION_RECORD)


def _iter_json_array(text, source):
    """Yield ``(line, value)`` for each element of a top-level JSON array."""
    decoder = json.JSONDecoder()
    n = len(text)

    def skip(pos):
        while pos < n and text[pos] in " \t\r\n":
            pos += 1
        return pos

    def lineno(pos):
        return text.count("\n", 0, pos) + 1

    pos = skip(0)
    if pos >= n or text[pos] != "[":
        raise SchemaError(f"{source}: detection file must be a JSON array", [f"line {lineno(pos)}: expected '['"])
    pos = skip(pos + 1)
    if pos < n and text[pos] == "]":
        return
    while True:
        try:
            value, end = decoder.raw_decode(text, pos)
        except json.JSONDecodeError as e:
            raise SchemaError(f"{source}: invalid JSON", [f"line {e.lineno}: {e.msg}"]) from e
        yield lineno(pos), value
        pos = skip(end)
        if pos < n and text[pos] == ",":
            pos = skip(pos + 1)
        elif pos < n and text[pos] == "]":
            if skip(pos + 1) != n:
                raise SchemaError(f"{source}: trailing data", [f"line {lineno(pos + 1)}: data after array"])
            return
        else:
            raise SchemaError(f"{source}: invalid JSON", [f"line {lineno(pos)}: expected ',' or ']'"])


def parse_detections(text, source="<detections>"):
    """Parse detection-file text into :class:`DetectionRecord` objects.

    Every malformed record is reported, each with its line number, in a
    single :class:`SchemaError`.

    Records without an explicit ``id`` are tie-broken by their content, so
    the result does not depend on the order of records in the file.
    """
    problems = []
    records = []
    for line, rec in _iter_json_array(text, source):
        errors = sorted(_RECORD_VALIDATOR.iter_errors(rec), key=lambda e: list(e.path))
        if not errors:
            box = BoundingBox.from_list(rec["bbox"])
            for p in box.problems():
                errors.append(jsonschema.ValidationError(f"bbox {rec['bbox']}: {p}"))
        if errors:
            problems.extend(f"line {line}: {e.message}" for e in errors)
            continue
        explicit = str(rec["id"]) if "id" in rec else ""
        key = (explicit, rec["image_id"], rec["class"], *box.to_list())
        records.append(DetectionRecord(rec["image_id"], box, rec["class"], float(rec["score"]), key))
    if problems:
        raise SchemaError(f"{source}: {len(problems)} schema violation(s)", problems)
    return records


def load_detections(path):
    return parse_detections(Path(path).read_text(), source=str(path))


@dataclass
class EvalConfig:
    iou_thresh: float = 0.5
    ap_mode: str = "allpoint"
    map_classes: tuple = MAP_CLASSES
    data_format: str = None

    def __post_init__(self):
        if self.ap_mode not in AP_MODES:
            raise PolarDetError(f"ap_mode must be one of {AP_MODES}, got {self.ap_mode!r}")
        if not 0.0 < self.iou_thresh <= 1.0:
            raise PolarDetError(f"iou_thresh must lie in (0, 1], got {self.iou_thresh!r}")
        self.map_classes = tuple(self.map_classes)


@dataclass
class EvalReport:
    """Per-class APs, weighted mAP and, optionally, error rates against a baseline."""

    classes: dict
    map: float
    counts: dict
    config: EvalConfig = field(default_factory=EvalConfig)
    error_rate: dict = None
    baseline_format: str = None
    flags: list = field(default_factory=list)

    @property
    def data_format(self):
        return self.config.data_format

    def ap(self, class_label):
        res = self.classes.get(class_label)
        return res.ap if res is not None else 0.0

    def to_dict(self):
        er = None
        if self.error_rate is not None:
            er = {"baseline_format": self.baseline_format, "per_class": dict(sorted(self.error_rate.items()))}
        return {
            "data_format": self.config.data_format,
            "iou_threshold": self.config.iou_thresh,
            "ap_mode": self.config.ap_mode,
            "classes": {c: self.classes[c].to_dict() for c in sorted(self.classes)},
            "map": {
                "value": self.map,
                "classes": list(self.config.map_classes),
                "counts": {c: self.counts.get(c, 0) for c in self.config.map_classes},
            },
            "error_rate": er,
            "flags": sorted(self.flags),
        }

    def to_json(self):
        return json.dumps(self.to_dict(), indent=2, sort_keys=True) + "\n"

    def to_csv(self):
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["class", "n_gt", "n_det", "ap", "error_rate"])
        for c in sorted(self.classes):
            r = self.classes[c]
            er = (self.error_rate or {}).get(c)
            w.writerow([c, r.n_gt, r.n_det, f"{r.ap:.6f}", "" if er is None else f"{er:.4f}"])
        w.writerow(["mAP", sum(self.counts.get(c, 0) for c in self.config.map_classes), "",
                    "" if self.map is None else f"{self.map:.6f}", ""])
        return buf.getvalue()


def baseline_aps(baseline):
    """Per-class APs from a baseline: an :class:`EvalReport`, its dict, or a path."""
    if isinstance(baseline, EvalReport):
        return {c: r.ap for c, r in baseline.classes.items()}, baseline.data_format
    if isinstance(baseline, (str, Path)):
        try:
            baseline = json.loads(Path(baseline).read_text())
        except json.JSONDecodeError as e:
            raise SchemaError("baseline report is not valid JSON", [f"line {e.lineno}: {e.msg}"]) from e
    try:
        return {c: float(r["ap"]) for c, r in baseline["classes"].items()}, baseline.get("data_format")
    except (KeyError, TypeError, AttributeError, ValueError):
        raise SchemaError("baseline must be an evaluation report with per-class APs") from None


def evaluate(manifest, detections, config=None, baseline=None):
    """Evaluate detections against a manifest's ground truth.

    Parameters
    ----------
    manifest : DatasetManifest
    detections : list of DetectionRecord
    config : EvalConfig, optional
    baseline : EvalReport, dict or path, optional
        Earlier report whose APs are the reference for error-rate evolution.

    Returns
    -------
    EvalReport
    """
    config = config or EvalConfig()
    known = {im.id for im in manifest.images}
    stray = sorted({d.image_id for d in detections if d.image_id not in known})
    if stray:
        raise SchemaError("detections reference images missing from the manifest",
                          [f"unknown image_id {i!r}" for i in stray])

    gt_classes = {a.class_label for a in manifest.annotations}
    det_classes = {d.class_label for d in detections}
    counts = {c: 0 for c in sorted(gt_classes | set(config.map_classes))}
    for a in manifest.annotations:
        counts[a.class_label] += 1

    classes = {}
    flags = []
    for c in sorted(gt_classes | det_classes):
        res = average_precision(manifest.annotations, detections, c, config.iou_thresh, config.ap_mode)
        classes[c] = res
        if "no_ground_truth" in res.flags:
            flags.append(f"{c}: no ground truth")

    aps = {c: classes[c].ap if c in classes else 0.0 for c in config.map_classes}
    try:
        mean = weighted_mean_ap(aps, counts)
    except ZeroInstancesError:
        mean = None
        flags.append("mAP undefined: no ground truth in the mAP classes")

    error_rate, baseline_format = None, None
    if baseline is not None:
        base, baseline_format = baseline_aps(baseline)
        error_rate = {}
        for c in config.map_classes:
            if c not in base or c not in classes:
                continue
            try:
                error_rate[c] = error_rate_evolution(base[c], classes[c].ap)
            except BaselinePerfectError:
                error_rate[c] = None
                flags.append(f"{c}: baseline AP is 1, error rate undefined")

    return EvalReport(classes, mean, counts, config, error_rate, baseline_format, flags)


class DetectionEvaluator(BaseEstimator):
    """Estimator-style wrapper: ``fit`` on ground truth, ``score`` detections.

    Parameters
    ----------
    iou_thresh : float, default=0.5
    ap_mode : {"allpoint", "11point"}, default="allpoint"
    map_classes : tuple of str, default=("person", "car")
    data_format : str or None
        Tag stored in reports, e.g. ``"S0,S1,S2"``.
    """

    def __init__(self, iou_thresh=0.5, ap_mode="allpoint", map_classes=MAP_CLASSES, data_format=None):
        self.iou_thresh = iou_thresh
        self.ap_mode = ap_mode
        self.map_classes = map_classes
        self.data_format = data_format

    def fit(self, manifest, y=None):
        if isinstance(manifest, (str, Path)):
            manifest = DatasetManifest.load(manifest)
        self.config_ = EvalConfig(self.iou_thresh, self.ap_mode, self.map_classes, self.data_format)
        self.manifest_ = manifest
        return self

    def evaluate(self, detections, baseline=None):
        check_is_fitted(self, "manifest_")
        if isinstance(detections, (str, Path)):
            detections = load_detections(detections)
        return evaluate(self.manifest_, detections, self.config_, baseline)

    def score(self, detections, y=None):
        """Weighted mAP of ``detections`` (0 when undefined)."""
        report = self.evaluate(detections)
        return report.map if report.map is not None else 0.0


__all__ = [
    "APResult",
    "DetectionEvaluator",
    "EvalConfig",
    "EvalReport",
    "evaluate",
    "load_detections",
    "parse_detections",
]
