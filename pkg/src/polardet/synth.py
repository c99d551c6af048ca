"""Synthetic polarimetric scenes with known ground truth.

A scene is a background plus axis-aligned rectangles, each with its own
(S0, DOP, AOP). Rendering runs the physical chain forwards: fields to Stokes
planes, Stokes to the four polarizer intensities, intensities to a raw DoFP
mosaic. With no noise, demosaicing and Stokes recovery must give the
requested fields back wherever a superpixel lies inside one region.

Noise is additive Gaussian per raw sample, clamped at zero. Each raw row
draws from its own Philox stream (key = seed, counter = row), so any band
of rows renders identically whether produced alone or as part of the frame.
"""

import json
import math
from dataclasses import dataclass, field
from pathlib import Path

import jsonschema
import numpy as np

from . import schemas
from .dataset import Annotation, BoundingBox, DatasetManifest, ImageRecord
from .exceptions import OddDimensionsError, PolarDetError, SchemaError
from .mosaic import DEFAULT_LAYOUT, MosaicLayout
from .stokes import ANGLES_DEG, forward_map


@dataclass(frozen=True)
class PolarField:
    """Uniform polarization state: total intensity, degree and angle."""

    s0: float
    dop: float = 0.0
    aop: float = 0.0

    def __post_init__(self):
        if not (math.isfinite(self.s0) and self.s0 >= 0):
            raise PolarDetError(f"s0 must be finite and non-negative, got {self.s0!r}")
        if not 0.0 <= self.dop <= 1.0:
            raise PolarDetError(f"dop must lie in [0, 1], got {self.dop!r}")
        if not -math.pi / 2 <= self.aop <= math.pi / 2:
            raise PolarDetError(f"aop must lie in [-pi/2, pi/2], got {self.aop!r}")

    def stokes(self):
        return (
            self.s0,
            self.s0 * self.dop * math.cos(2 * self.aop),
            self.s0 * self.dop * math.sin(2 * self.aop),
        )


@dataclass(frozen=True)
class Region:
    """Rectangle ``[x0, x1) x [y0, y1)`` in raw-frame pixels."""

    bbox: tuple
    field: PolarField
    class_label: str = None


@dataclass
class SceneSpec:
    width: int
    height: int
    background: PolarField = field(default_factory=lambda: PolarField(0.0))
    regions: list = field(default_factory=list)
    noise_sigma: float = 0.0
    seed: int = 0
    name: str = "scene"
    bit_depth: int = 16

    def __post_init__(self):
        if self.width < 1 or self.height < 1:
            raise PolarDetError(f"scene size must be positive, got {self.width}x{self.height}")
        if not (math.isfinite(self.noise_sigma) and self.noise_sigma >= 0):
            raise PolarDetError(f"noise_sigma must be >= 0, got {self.noise_sigma!r}")
        for r in self.regions:
            x0, y0, x1, y1 = r.bbox
            if not (0 <= x0 < x1 <= self.width and 0 <= y0 < y1 <= self.height):
                raise PolarDetError(f"region {r.bbox} outside {self.width}x{self.height} scene")

    @classmethod
    def from_dict(cls, data):
        errors = sorted(jsonschema.Draft7Validator(schemas.SCENE).iter_errors(data), key=lambda e: list(e.path))
        if errors:
            raise SchemaError("scene spec does not follow the schema",
                              [f"{'/'.join(map(str, e.path)) or '<root>'}: {e.message}" for e in errors])

        def polar(d):
            return PolarField(float(d["s0"]), float(d.get("dop", 0.0)), float(d.get("aop", 0.0)))

        return cls(
            width=data["width"],
            height=data["height"],
            background=polar(data.get("background", {"s0": 0.0})),
            regions=[Region(tuple(r["bbox"]), polar(r), r.get("class")) for r in data.get("regions", [])],
            noise_sigma=float(data.get("noise_sigma", 0.0)),
            seed=int(data.get("seed", 0)),
            name=data.get("name", "scene"),
            bit_depth=int(data.get("bit_depth", 16)),
        )

    @classmethod
    def load(cls, path):
        try:
            return cls.from_dict(json.loads(Path(path).read_text()))
        except json.JSONDecodeError as e:
            raise SchemaError(f"{path}: invalid JSON", [f"line {e.lineno}: {e.msg}"]) from e

    def to_dict(self):
        def polar(f):
            return {"s0": f.s0, "dop": f.dop, "aop": f.aop}

        regions = []
        for r in self.regions:
            d = dict(bbox=list(r.bbox), **polar(r.field))
            if r.class_label is not None:
                d["class"] = r.class_label
            regions.append(d)
        return {
            "name": self.name,
            "width": self.width,
            "height": self.height,
            "background": polar(self.background),
            "regions": regions,
            "noise_sigma": self.noise_sigma,
            "seed": self.seed,
            "bit_depth": self.bit_depth,
        }


def render_fields(spec):
    """Requested ``(s0, dop, aop)`` planes, each ``(height, width)``."""
    planes = np.empty((3, spec.height, spec.width))
    planes[:] = np.array([spec.background.s0, spec.background.dop, spec.background.aop])[:, None, None]
    for r in spec.regions:
        x0, y0, x1, y1 = r.bbox
        planes[:, y0:y1, x0:x1] = np.array([r.field.s0, r.field.dop, r.field.aop])[:, None, None]
    return planes


def render_stokes(spec):
    """Full-resolution Stokes image ``(3, height, width)`` of the scene."""
    out = np.empty((3, spec.height, spec.width))
    out[:] = np.array(spec.background.stokes())[:, None, None]
    for r in spec.regions:
        x0, y0, x1, y1 = r.bbox
        out[:, y0:y1, x0:x1] = np.array(r.field.stokes())[:, None, None]
    return out


def row_noise(seed, row, width):
    """Standard normal samples for one raw row, independent of every other row."""
    bitgen = np.random.Philox(key=seed, counter=[0, 0, 0, row])
    return np.random.Generator(bitgen).standard_normal(width)


def render_raw(spec, layout=DEFAULT_LAYOUT):
    """Raw DoFP frame ``(height, width)`` as float64 samples.

    Each pixel holds the intensity its micro-polarizer transmits; noise, if
    any, is added afterwards and negative samples are clamped to 0.
    """
    if spec.width % 2 or spec.height % 2:
        raise OddDimensionsError(f"raw frames need even dimensions, got {spec.width}x{spec.height}")
    layout = MosaicLayout.parse(layout)
    intensities = dict(zip(ANGLES_DEG, forward_map(*render_stokes(spec))))
    angles = layout.angle_grid(spec.height, spec.width)
    raw = np.zeros((spec.height, spec.width))
    for a, plane in intensities.items():
        raw = np.where(angles == a, plane, raw)
    if spec.noise_sigma > 0:
        noise = np.stack([row_noise(spec.seed, y, spec.width) for y in range(spec.height)])
        raw = np.maximum(raw + spec.noise_sigma * noise, 0.0)
    return raw


def quantize(raw, bit_depth=16):
    """Round a float render to integer samples within the sensor range."""
    i_max = 2 ** bit_depth - 1
    return np.clip(np.floor(np.asarray(raw) + 0.5), 0, i_max).astype(np.uint16)


def truth_manifest(spec, image_path="", split="test"):
    """Manifest of the labelled regions in demosaiced (half-resolution) coordinates."""
    w, h = spec.width // 2, spec.height // 2
    annotations = [
        Annotation(spec.name, BoundingBox(r.bbox[0] / 2, r.bbox[1] / 2, r.bbox[2] / 2, r.bbox[3] / 2), r.class_label)
        for r in spec.regions
        if r.class_label is not None
    ]
    return DatasetManifest(split, [ImageRecord(spec.name, str(image_path), w, h)], annotations)
