"""8-bit encoding of polarimetric planes into three-channel images.

Each combination stands in for RGB as a detector input:

==============  ====================
combo tag       channels, in order
==============  ====================
``intensity``   I0, I45, I135
``stokes``      S0, S1, S2
``physics``     S0, AOP, DOP
==============  ====================

Channels are mapped affinely onto [0, 255] with fixed physical ranges
derived from the sensor bit depth, so encodings are comparable across
images. Min-max normalization per image is available with ``norm="per-image"``.
"""

import enum
import json
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from sklearn.base import BaseEstimator, TransformerMixin
from sklearn.utils.validation import check_is_fitted

from .exceptions import MissingChannelError, PolarDetError
from .io import write_png
from .stokes import EPS_CLAMP, aop_map, dop_map, stokes_map
from .utils.validation import check_bit_depth, check_planes

NORM_MODES = ("fixed", "per-image")

# values this close to a .5 tie are rounded up; absorbs representation error
_TIE_DECIMALS = 9


class ChannelCombo(enum.Enum):
    INTENSITY = "intensity"
    STOKES = "stokes"
    PHYSICS = "physics"

    @property
    def channels(self):
        return _COMBO_CHANNELS[self]

    @classmethod
    def parse(cls, value):
        if isinstance(value, cls):
            return value
        key = str(value).strip().lower()
        for combo in cls:
            if key in (combo.value, combo.name.lower()):
                return combo
        if key in _COMBO_ALIASES:
            return _COMBO_ALIASES[key]
        raise PolarDetError(f"unknown channel combination {value!r}")


_COMBO_CHANNELS = {
    ChannelCombo.INTENSITY: ("i0", "i45", "i135"),
    ChannelCombo.STOKES: ("s0", "s1", "s2"),
    ChannelCombo.PHYSICS: ("s0", "aop", "dop"),
}
_COMBO_ALIASES = {
    "i0,i45,i135": ChannelCombo.INTENSITY,
    "s0,s1,s2": ChannelCombo.STOKES,
    "s0,aop,dop": ChannelCombo.PHYSICS,
}


@dataclass(frozen=True)
class NormalizationSpec:
    """Affine map of ``[lo, hi]`` onto ``[0, 255]``, rounding half up."""

    lo: float
    hi: float

    def __post_init__(self):
        if not (math.isfinite(self.lo) and math.isfinite(self.hi)) or self.hi <= self.lo:
            raise PolarDetError(f"normalization needs finite hi > lo, got ({self.lo}, {self.hi})")

    def encode(self, x):
        return encode_channel(x, self)

    def to_dict(self):
        return {"lo": float(self.lo), "hi": float(self.hi)}


def encode_channel(plane, spec):
    """Map a float plane to ``uint8`` through ``spec``; out-of-range values clamp."""
    x = np.asarray(plane, dtype=np.float64)
    scaled = 255.0 * (x - spec.lo) / (spec.hi - spec.lo)
    rounded = np.floor(np.round(scaled, _TIE_DECIMALS) + 0.5)
    return np.clip(rounded, 0, 255).astype(np.uint8)


def fixed_specs(bit_depth=16):
    """Physical ranges for every encodable channel at the given sensor bit depth.

    With ``I_max = 2**bit_depth - 1``: intensities span ``[0, I_max]``, S0
    ``[0, 2 I_max]``, S1 and S2 ``[-I_max, I_max]``, AOP ``[-pi/2, pi/2]`` and
    DOP ``[0, 1]``.
    """
    i_max = float(2 ** check_bit_depth(bit_depth) - 1)
    intensity = NormalizationSpec(0.0, i_max)
    return {
        "i0": intensity,
        "i45": intensity,
        "i90": intensity,
        "i135": intensity,
        "s0": NormalizationSpec(0.0, 2 * i_max),
        "s1": NormalizationSpec(-i_max, i_max),
        "s2": NormalizationSpec(-i_max, i_max),
        "aop": NormalizationSpec(-math.pi / 2, math.pi / 2),
        "dop": NormalizationSpec(0.0, 1.0),
    }


def per_image_spec(plane):
    """Min-max spec of one plane; a constant plane maps to 0."""
    lo, hi = float(np.min(plane)), float(np.max(plane))
    return NormalizationSpec(lo, hi if hi > lo else lo + 1.0)


class PolarImage:
    """Named single-channel float planes sharing one ``(height, width)``.

    Missing Stokes planes are derived on demand from a complete intensity
    quad, and AOP/DOP from the Stokes planes. Intensities are never derived
    from Stokes planes: an image built from Stokes alone cannot feed the
    ``intensity`` combo.
    """

    INTENSITY_PLANES = ("i0", "i45", "i90", "i135")
    STOKES_PLANES = ("s0", "s1", "s2")

    def __init__(self, planes, *, eps_clamp=EPS_CLAMP):
        if not planes:
            raise PolarDetError("PolarImage needs at least one plane")
        self._planes = {}
        shape = None
        for name, plane in planes.items():
            plane = np.asarray(plane, dtype=np.float64)
            if plane.ndim != 2:
                raise PolarDetError(f"plane {name!r} must be 2-D, got shape {plane.shape}")
            if shape is not None and plane.shape != shape:
                raise PolarDetError(f"plane {name!r} has shape {plane.shape}, expected {shape}")
            shape = plane.shape
            self._planes[name] = plane
        self.shape = shape
        self.eps_clamp = eps_clamp
        self.flags = {}

    @classmethod
    def from_quad(cls, quad, **kwargs):
        quad = check_planes(quad, 4, name="intensity quad")
        if quad.ndim != 3:
            raise PolarDetError("from_quad expects a single (4, h, w) image")
        return cls(dict(zip(cls.INTENSITY_PLANES, quad)), **kwargs)

    @classmethod
    def from_stokes(cls, stokes, **kwargs):
        stokes = check_planes(stokes, 3, name="Stokes image")
        if stokes.ndim != 3:
            raise PolarDetError("from_stokes expects a single (3, h, w) image")
        return cls(dict(zip(cls.STOKES_PLANES, stokes)), **kwargs)

    @property
    def channels(self):
        return tuple(self._planes)

    def __contains__(self, name):
        try:
            self[name]
        except MissingChannelError:
            return False
        return True

    def __getitem__(self, name):
        if name not in self._planes:
            try:
                self._derive(name)
            except MissingChannelError:
                pass
        if name not in self._planes:
            raise MissingChannelError(
                f"image with planes {sorted(self._planes)} cannot provide {name!r}"
            )
        return self._planes[name]

    def _derive(self, name):
        if name in self.STOKES_PLANES:
            if all(p in self._planes for p in self.INTENSITY_PLANES):
                derived = stokes_map(*(self._planes[p] for p in self.INTENSITY_PLANES))
                for p, plane in zip(self.STOKES_PLANES, derived):
                    self._planes.setdefault(p, plane)
        elif name == "aop":
            angle, degenerate = aop_map(self["s1"], self["s2"])
            self._planes["aop"] = angle
            self.flags["degenerate_aop"] = int(degenerate.sum())
        elif name == "dop":
            ratio, flags = dop_map(self["s0"], self["s1"], self["s2"], self.eps_clamp)
            self._planes["dop"] = ratio
            self.flags.update({f"dop_{k}": v for k, v in flags.counts().items()})


@dataclass
class EncodedImage:
    """Three interleaved 8-bit channels plus the normalization that made them."""

    pixels: np.ndarray
    combo: ChannelCombo
    channels: tuple
    specs: tuple
    norm: str = "fixed"
    bit_depth: int = 16
    flags: dict = field(default_factory=dict)

    @property
    def height(self):
        return self.pixels.shape[0]

    @property
    def width(self):
        return self.pixels.shape[1]

    def sidecar(self, source=None):
        meta = {
            "combo": self.combo.value,
            "channels": list(self.channels),
            "width": int(self.width),
            "height": int(self.height),
            "bit_depth": int(self.bit_depth),
            "normalization": {
                "mode": self.norm,
                "specs": [dict(channel=c, **s.to_dict()) for c, s in zip(self.channels, self.specs)],
            },
            "flags": {k: int(v) for k, v in sorted(self.flags.items())},
        }
        if source is not None:
            meta["source"] = str(source)
        return meta


def encode_combo(image, combo, *, bit_depth=16, norm="fixed", channels=None):
    """Assemble a combination from a :class:`PolarImage` (or a ``(4, h, w)`` quad).

    Parameters
    ----------
    image : PolarImage or array-like
    combo : ChannelCombo or str
    bit_depth : int, default=16
        Sensor bit depth for the fixed ranges.
    norm : {"fixed", "per-image"}
    channels : sequence of str, optional
        Reordering of the combo's channels, e.g. ``("s0", "dop", "aop")``.

    Raises
    ------
    MissingChannelError
        If ``image`` cannot supply a plane the combo needs.
    """
    combo = ChannelCombo.parse(combo)
    if norm not in NORM_MODES:
        raise PolarDetError(f"norm must be one of {NORM_MODES}, got {norm!r}")
    if not isinstance(image, PolarImage):
        image = PolarImage.from_quad(image)
    names = tuple(channels) if channels is not None else combo.channels
    if sorted(names) != sorted(combo.channels):
        raise PolarDetError(f"channels {names} are not a reordering of {combo.channels}")
    fixed = fixed_specs(bit_depth) if norm == "fixed" else None
    planes, specs = [], []
    for name in names:
        plane = image[name]
        spec = fixed[name] if fixed else per_image_spec(plane)
        planes.append(encode_channel(plane, spec))
        specs.append(spec)
    return EncodedImage(
        pixels=np.stack(planes, axis=-1),
        combo=combo,
        channels=names,
        specs=tuple(specs),
        norm=norm,
        bit_depth=int(bit_depth),
        flags=dict(image.flags),
    )


def write_encoded(img, png_path, sidecar_path=None, source=None):
    """Write ``img`` as PNG plus a JSON sidecar (default: same stem, ``.json``)."""
    png_path = Path(png_path)
    sidecar_path = Path(sidecar_path) if sidecar_path else png_path.with_suffix(".json")
    write_png(png_path, img)
    sidecar_path.write_text(json.dumps(img.sidecar(source), indent=2, sort_keys=True) + "\n")
    return png_path, sidecar_path


class PolarEncoder(TransformerMixin, BaseEstimator):
    """Encode intensity quads into 8-bit three-channel images.

    Parameters
    ----------
    combo : {"intensity", "stokes", "physics"}, default="stokes"
    norm : {"fixed", "per-image"}, default="fixed"
    bit_depth : int, default=16
        Sensor bit depth; sets the fixed physical ranges.
    channels : tuple of str or None, default=None
        Optional reordering of the combo's channels.

    Attributes
    ----------
    combo_ : ChannelCombo
    specs_ : tuple of NormalizationSpec or None
        Fixed-mode specs in channel order; None for per-image mode.

    Notes
    -----
    ``transform`` maps ``(..., 4, h, w)`` float or integer stacks to
    ``(..., h, w, 3)`` uint8. Use :meth:`encode` to also get the per-image
    metadata.
    """

    def __init__(self, combo="stokes", norm="fixed", bit_depth=16, channels=None):
        self.combo = combo
        self.norm = norm
        self.bit_depth = bit_depth
        self.channels = channels

    def fit(self, X, y=None):
        check_planes(X, 4, name="intensity stack")
        if self.norm not in NORM_MODES:
            raise PolarDetError(f"norm must be one of {NORM_MODES}, got {self.norm!r}")
        self.combo_ = ChannelCombo.parse(self.combo)
        names = tuple(self.channels) if self.channels is not None else self.combo_.channels
        if sorted(names) != sorted(self.combo_.channels):
            raise PolarDetError(f"channels {names} are not a reordering of {self.combo_.channels}")
        self.channels_ = names
        if self.norm == "fixed":
            table = fixed_specs(self.bit_depth)
            self.specs_ = tuple(table[c] for c in names)
        else:
            self.specs_ = None
        return self

    def encode(self, X):
        """Encode each image in the stack; returns a list of :class:`EncodedImage`."""
        check_is_fitted(self, "combo_")
        X = check_planes(X, 4, name="intensity stack")
        flat = X.reshape((-1,) + X.shape[-3:])
        return [
            encode_combo(q, self.combo_, bit_depth=self.bit_depth, norm=self.norm, channels=self.channels_)
            for q in flat
        ]

    def transform(self, X):
        X = check_planes(X, 4, name="intensity stack")
        encoded = self.encode(X)
        h, w = X.shape[-2:]
        out = np.stack([e.pixels for e in encoded]) if encoded else np.empty((0, h, w, 3), np.uint8)
        return out.reshape(X.shape[:-3] + (h, w, 3))
