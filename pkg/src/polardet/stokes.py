"""Per-pixel linear polarization math.

A polarizer at angle ``a`` in front of the sensor measures

    I(a) = (S0 + S1 cos 2a + S2 sin 2a) / 2

for the linear Stokes vector ``(S0, S1, S2)``. A division-of-focal-plane
camera samples ``a`` at 0, 45, 90 and 135 degrees, which overdetermines the
three unknowns; :func:`stokes_from_quad` is the least-squares inverse.

Two API levels are provided. The scalar functions (:func:`intensity_at`,
:func:`forward_quad`, :func:`stokes_from_quad`, :func:`aop`, :func:`dop`)
work on value types and raise on invalid physics. The ``*_map`` functions
broadcast over arrays of any shape and report problems as boolean masks so
image-wide computations stay total.
"""

import math
from dataclasses import dataclass

import numpy as np
from sklearn.base import BaseEstimator, TransformerMixin

from .exceptions import NonPhysicalError, ZeroIntensityError
from .utils.validation import check_planes

ANGLES_DEG = (0, 45, 90, 135)
ANGLES = tuple(math.radians(a) for a in ANGLES_DEG)

EPS_PHYSICAL = 1e-9
EPS_CLAMP = 1e-6

_HALF_PI = math.pi / 2


@dataclass(frozen=True)
class StokesVector:
    """Linear Stokes vector of one pixel."""

    s0: float
    s1: float
    s2: float

    @property
    def polarized_intensity(self):
        return math.hypot(self.s1, self.s2)

    def is_physical(self, eps=EPS_PHYSICAL):
        """True when ``s0 >= 0`` and the polarized part does not exceed ``s0``."""
        return self.s0 >= 0 and self.polarized_intensity <= self.s0 * (1 + eps)

    def scaled(self, k):
        return StokesVector(k * self.s0, k * self.s1, k * self.s2)

    def rotated(self, theta):
        """Rotate the polarization orientation by ``theta`` radians.

        (S1, S2) turns by ``2 * theta``, so the AOP grows by ``theta``
        (modulo pi) and the DOP is unchanged.
        """
        c, s = math.cos(2 * theta), math.sin(2 * theta)
        return StokesVector(self.s0, c * self.s1 - s * self.s2, s * self.s1 + c * self.s2)


@dataclass(frozen=True)
class IntensityQuad:
    """Intensities behind polarizers at 0, 45, 90 and 135 degrees."""

    i0: float
    i45: float
    i90: float
    i135: float

    def as_tuple(self):
        return (self.i0, self.i45, self.i90, self.i135)

    def is_valid(self):
        return all(v >= 0 for v in self.as_tuple())

    def is_consistent(self, rel_tol=1e-12):
        """Whether ``i0 + i90 == i45 + i135`` up to ``rel_tol``."""
        return math.isclose(self.i0 + self.i90, self.i45 + self.i135, rel_tol=rel_tol, abs_tol=0.0)


@dataclass(frozen=True)
class Aop:
    """Angle of polarization in radians, within (-pi/2, pi/2].

    ``degenerate`` is set when the light carries no polarized component
    (S1 == S2 == 0); the angle is then reported as 0 by convention.
    """

    radians: float
    degenerate: bool = False

    def __float__(self):
        return float(self.radians)


@dataclass(frozen=True)
class Dop:
    """Degree of polarization in [0, 1].

    ``clamped`` is set when rounding noise pushed the ratio slightly above 1
    and it was brought back to exactly 1.
    """

    ratio: float
    clamped: bool = False

    def __float__(self):
        return float(self.ratio)


def intensity_at(stokes, angle):
    """Intensity measured behind a linear polarizer at ``angle`` radians."""
    return 0.5 * (stokes.s0 + stokes.s1 * math.cos(2 * angle) + stokes.s2 * math.sin(2 * angle))


def forward_quad(stokes):
    """The four DoFP intensities produced by ``stokes``.

    The trigonometric factors at the four canonical angles are exactly 0 or
    +-1, so they are applied directly instead of through ``cos``/``sin``.
    """
    s0, s1, s2 = stokes.s0, stokes.s1, stokes.s2
    return IntensityQuad(0.5 * (s0 + s1), 0.5 * (s0 + s2), 0.5 * (s0 - s1), 0.5 * (s0 - s2))


def stokes_from_quad(quad):
    """Least-squares Stokes estimate from a four-angle measurement.

    Exact inverse of :func:`forward_quad` on consistent quads. Inconsistent
    quads (noise) still map to a Stokes vector, possibly non-physical.
    """
    return StokesVector(
        0.5 * (quad.i0 + quad.i45 + quad.i90 + quad.i135),
        quad.i0 - quad.i90,
        quad.i45 - quad.i135,
    )


def aop(stokes):
    """Angle of polarization of ``stokes`` as an :class:`Aop`."""
    if stokes.s1 == 0 and stokes.s2 == 0:
        return Aop(0.0, degenerate=True)
    angle = 0.5 * math.atan2(stokes.s2, stokes.s1)
    if angle <= -_HALF_PI:
        angle += math.pi
    return Aop(angle)


def dop(stokes, eps_clamp=EPS_CLAMP):
    """Degree of polarization of ``stokes`` as a :class:`Dop`.

    Raises
    ------
    ZeroIntensityError
        If ``s0 == 0``.
    NonPhysicalError
        If ``s0 < 0`` or the ratio exceeds ``1 + eps_clamp``.
    """
    if stokes.s0 == 0:
        raise ZeroIntensityError("DOP is undefined for zero total intensity")
    if stokes.s0 < 0:
        raise NonPhysicalError(f"negative total intensity S0={stokes.s0!r}")
    ratio = stokes.polarized_intensity / stokes.s0
    if ratio <= 1.0:
        return Dop(ratio)
    if ratio <= 1.0 + eps_clamp:
        return Dop(1.0, clamped=True)
    raise NonPhysicalError(f"DOP {ratio!r} exceeds 1 beyond clamp tolerance {eps_clamp}")


# -- array level -------------------------------------------------------------


def forward_map(s0, s1, s2):
    """Array version of :func:`forward_quad`; returns ``(i0, i45, i90, i135)``."""
    s0, s1, s2 = np.asarray(s0, float), np.asarray(s1, float), np.asarray(s2, float)
    return 0.5 * (s0 + s1), 0.5 * (s0 + s2), 0.5 * (s0 - s1), 0.5 * (s0 - s2)


def stokes_map(i0, i45, i90, i135):
    """Array version of :func:`stokes_from_quad`; returns ``(s0, s1, s2)``."""
    i0, i45, i90, i135 = (np.asarray(v, float) for v in (i0, i45, i90, i135))
    return 0.5 * (i0 + i45 + i90 + i135), i0 - i90, i45 - i135


def intensity_map(s0, s1, s2, angle):
    """Array version of :func:`intensity_at`; ``angle`` broadcasts too."""
    angle = np.asarray(angle, float)
    return 0.5 * (np.asarray(s0) + np.asarray(s1) * np.cos(2 * angle) + np.asarray(s2) * np.sin(2 * angle))


def aop_map(s1, s2):
    """Broadcasting AOP.

    Returns
    -------
    angle : numpy.ndarray
        Values in (-pi/2, pi/2]; 0 where the pixel is degenerate.
    degenerate : numpy.ndarray of bool
        Pixels with S1 == S2 == 0.
    """
    s1, s2 = np.broadcast_arrays(np.asarray(s1, float), np.asarray(s2, float))
    angle = 0.5 * np.arctan2(s2, s1)
    angle = np.where(angle <= -_HALF_PI, angle + np.pi, angle)
    degenerate = (s1 == 0) & (s2 == 0)
    return np.where(degenerate, 0.0, angle), degenerate


@dataclass(frozen=True)
class DopFlags:
    """Per-pixel masks produced by :func:`dop_map`."""

    zero_intensity: np.ndarray
    clamped: np.ndarray
    nonphysical: np.ndarray

    def counts(self):
        return {
            "zero_intensity": int(self.zero_intensity.sum()),
            "clamped": int(self.clamped.sum()),
            "nonphysical": int(self.nonphysical.sum()),
        }


def dop_map(s0, s1, s2, eps_clamp=EPS_CLAMP):
    """Broadcasting DOP that flags instead of raising.

    Zero-intensity pixels get ratio 0. Ratios within ``(1, 1 + eps_clamp]``
    are clamped to 1. Larger ratios, and pixels with negative ``s0``, are
    kept as computed and flagged ``nonphysical``; callers decide whether to
    clip them.
    """
    s0, s1, s2 = np.broadcast_arrays(*(np.asarray(v, float) for v in (s0, s1, s2)))
    zero = s0 == 0
    with np.errstate(divide="ignore", invalid="ignore"):
        ratio = np.where(zero, 0.0, np.hypot(s1, s2) / np.where(zero, 1.0, s0))
    clamped = (ratio > 1.0) & (ratio <= 1.0 + eps_clamp) & (s0 > 0)
    ratio = np.where(clamped, 1.0, ratio)
    nonphysical = (s0 < 0) | (ratio > 1.0)
    return ratio, DopFlags(zero, clamped, nonphysical)


class StokesTransformer(TransformerMixin, BaseEstimator):
    """Convert four-angle intensity stacks into Stokes stacks.

    Input has shape ``(..., 4, height, width)`` with planes ordered
    (I0, I45, I90, I135); output has shape ``(..., 3, height, width)`` with
    planes (S0, S1, S2). Stateless: ``fit`` only records the plane count.
    """

    def fit(self, X, y=None):
        check_planes(X, 4, name="intensity stack")
        self.n_planes_in_ = 4
        return self

    def transform(self, X):
        X = check_planes(X, 4, name="intensity stack")
        return np.stack(stokes_map(*np.moveaxis(X, -3, 0)), axis=-3)

    def inverse_transform(self, X):
        X = check_planes(X, 3, name="Stokes stack")
        return np.stack(forward_map(*np.moveaxis(X, -3, 0)), axis=-3)
