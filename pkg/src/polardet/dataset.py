"""Dataset curation: frame subsampling, annotation manifests, class statistics.

A manifest describes one split::

    {"split": "train",
     "images": [{"id": "f0001", "path": "f0001.pgm", "width": 1224, "height": 1024}],
     "annotations": [{"image_id": "f0001", "class": "car", "bbox": [x_min, y_min, x_max, y_max]}]}

Boxes use continuous pixel coordinates. Manifests are loaded leniently so
that :func:`validate` can report every problem as data instead of failing
on the first one.
"""

import json
import math
from dataclasses import dataclass, field
from pathlib import Path

from .exceptions import SchemaError

CLASSES = ("car", "person", "bike", "motorbike")
SPLITS = ("train", "test")
MIN_CLASS_COUNT = 30


@dataclass(frozen=True)
class BoundingBox:
    x_min: float
    y_min: float
    x_max: float
    y_max: float

    @classmethod
    def from_list(cls, values):
        x_min, y_min, x_max, y_max = (float(v) for v in values)
        return cls(x_min, y_min, x_max, y_max)

    def to_list(self):
        return [self.x_min, self.y_min, self.x_max, self.y_max]

    @property
    def width(self):
        return self.x_max - self.x_min

    @property
    def height(self):
        return self.y_max - self.y_min

    @property
    def area(self):
        return max(self.width, 0.0) * max(self.height, 0.0)

    def problems(self):
        """Invariant violations, as rule strings; empty when the box is valid."""
        out = []
        if not all(math.isfinite(v) for v in self.to_list()):
            out.append("non-finite coordinate")
            return out
        if self.x_max <= self.x_min:
            out.append("x_max ≤ x_min")
        if self.y_max <= self.y_min:
            out.append("y_max ≤ y_min")
        return out

    @property
    def is_valid(self):
        return not self.problems()


@dataclass(frozen=True)
class ImageRecord:
    id: str
    path: str
    width: int
    height: int


@dataclass(frozen=True)
class Annotation:
    image_id: str
    box: BoundingBox
    class_label: str


@dataclass
class DatasetManifest:
    split: str
    images: list = field(default_factory=list)
    annotations: list = field(default_factory=list)

    @classmethod
    def from_dict(cls, data):
        """Build a manifest from parsed JSON, raising :class:`SchemaError` on shape errors.

        Semantic problems (bad boxes, unknown classes, dangling ids) are
        left for :func:`validate`.
        """
        problems = []
        if not isinstance(data, dict):
            raise SchemaError("manifest must be a JSON object")
        split = data.get("split")
        if not isinstance(split, str):
            problems.append("'split' must be a string")
        images, annotations = [], []
        for k, rec in enumerate(data.get("images", [])):
            try:
                if isinstance(rec["width"], bool) or isinstance(rec["height"], bool):
                    raise TypeError
                images.append(ImageRecord(str(rec["id"]), str(rec["path"]), int(rec["width"]), int(rec["height"])))
            except (KeyError, TypeError, ValueError):
                problems.append(f"images[{k}]: needs id, path, integer width and height")
        for k, rec in enumerate(data.get("annotations", [])):
            try:
                bbox = rec["bbox"]
                if len(bbox) != 4:
                    raise ValueError
                annotations.append(Annotation(str(rec["image_id"]), BoundingBox.from_list(bbox), str(rec["class"])))
            except (KeyError, TypeError, ValueError):
                problems.append(f"annotations[{k}]: needs image_id, class and a 4-number bbox")
        if problems:
            raise SchemaError("manifest does not follow the schema", problems)
        return cls(split, images, annotations)

    @classmethod
    def load(cls, path):
        try:
            data = json.loads(Path(path).read_text())
        except json.JSONDecodeError as e:
            raise SchemaError(f"{path}: invalid JSON", [f"line {e.lineno}: {e.msg}"]) from e
        return cls.from_dict(data)

    def to_dict(self):
        return {
            "split": self.split,
            "images": [
                {"id": im.id, "path": im.path, "width": im.width, "height": im.height} for im in self.images
            ],
            "annotations": [
                {"image_id": a.image_id, "class": a.class_label, "bbox": a.box.to_list()} for a in self.annotations
            ],
        }

    def save(self, path):
        Path(path).write_text(json.dumps(self.to_dict(), indent=1) + "\n")

    def image_index(self):
        return {im.id: im for im in self.images}

    def class_counts(self):
        counts = dict.fromkeys(CLASSES, 0)
        for a in self.annotations:
            counts[a.class_label] = counts.get(a.class_label, 0) + 1
        return counts


def subsample(frame_ids, stride):
    """Keep every ``stride``-th frame, starting with the first."""
    if isinstance(stride, bool) or not isinstance(stride, int) or stride < 1:
        raise ValueError(f"stride must be a positive integer, got {stride!r}")
    return list(frame_ids)[::stride]


@dataclass(frozen=True)
class Violation:
    image_id: str
    rule: str
    detail: str = ""

    def to_dict(self):
        return {"image_id": self.image_id, "rule": self.rule, "detail": self.detail}

    def __str__(self):
        return f"{self.image_id}: {self.rule}" + (f" ({self.detail})" if self.detail else "")


def validate(manifest, classes=CLASSES):
    """Check every manifest invariant; returns a list of :class:`Violation`."""
    out = []
    if manifest.split not in SPLITS:
        out.append(Violation("", "unknown split", f"{manifest.split!r} not in {SPLITS}"))
    index = {}
    for im in manifest.images:
        if im.id in index:
            out.append(Violation(im.id, "duplicate image id"))
        index.setdefault(im.id, im)
        if im.width <= 0 or im.height <= 0:
            out.append(Violation(im.id, "non-positive image size", f"{im.width}x{im.height}"))
    for k, a in enumerate(manifest.annotations):
        where = f"annotation {k}"
        if a.class_label not in classes:
            out.append(Violation(a.image_id, "unknown class", f"{where}: {a.class_label!r}"))
        box_problems = a.box.problems()
        for rule in box_problems:
            out.append(Violation(a.image_id, rule, f"{where}: {a.box.to_list()}"))
        im = index.get(a.image_id)
        if im is None:
            out.append(Violation(a.image_id, "unresolved image_id", where))
        elif not box_problems and (
            a.box.x_min < 0 or a.box.y_min < 0 or a.box.x_max > im.width or a.box.y_max > im.height
        ):
            out.append(Violation(a.image_id, "out of bounds", f"{where}: {a.box.to_list()} vs {im.width}x{im.height}"))
    return out


@dataclass
class ClassStats:
    """Annotation counts per split and class."""

    counts: dict
    min_count: int = MIN_CLASS_COUNT

    @property
    def totals(self):
        out = {}
        for per_class in self.counts.values():
            for c, n in per_class.items():
                out[c] = out.get(c, 0) + n
        return out

    @property
    def insufficient(self):
        """Classes with fewer than ``min_count`` instances over all splits."""
        return [c for c, n in self.totals.items() if n < self.min_count]

    def to_dict(self):
        return {
            "counts": self.counts,
            "totals": self.totals,
            "insufficient": self.insufficient,
            "min_count": self.min_count,
        }


def stats(*manifests, min_count=MIN_CLASS_COUNT):
    """Count annotations per (split, class) over one or more manifests."""
    counts = {}
    for m in manifests:
        per_class = counts.setdefault(m.split, dict.fromkeys(CLASSES, 0))
        for c, n in m.class_counts().items():
            per_class[c] = per_class.get(c, 0) + n
    return ClassStats(counts, min_count)
