"""DoFP superpixel handling.

A division-of-focal-plane sensor tiles the frame with 2x2 superpixels, one
micro-polarizer angle per cell. Splitting decimates the frame into four
half-resolution planes with no interpolation; every raw sample lands in
exactly one plane.
"""

from dataclasses import dataclass

import numpy as np
from sklearn.base import BaseEstimator, TransformerMixin
from sklearn.utils.validation import check_is_fitted

from .exceptions import PolarDetError
from .stokes import ANGLES_DEG, StokesTransformer
from .utils.validation import check_planes, check_raw_frame


@dataclass(frozen=True)
class MosaicLayout:
    """Polarizer angle (degrees) of each cell of the 2x2 superpixel.

    ``grid[row][col]`` is the angle seen by raw pixel ``(2*j + row, 2*i + col)``.
    """

    grid: tuple = ((0, 45), (135, 90))

    def __post_init__(self):
        try:
            grid = tuple(tuple(int(a) for a in row) for row in self.grid)
        except (TypeError, ValueError):
            raise PolarDetError(f"layout must be a 2x2 grid of angles, got {self.grid!r}") from None
        if len(grid) != 2 or any(len(row) != 2 for row in grid):
            raise PolarDetError(f"layout must be a 2x2 grid of angles, got {self.grid!r}")
        if sorted(a for row in grid for a in row) != sorted(ANGLES_DEG):
            raise PolarDetError(f"layout must be a permutation of {ANGLES_DEG}, got {grid}")
        object.__setattr__(self, "grid", grid)

    @classmethod
    def parse(cls, value):
        """Build a layout from ``"0,45,135,90"`` (row-major) or a nested sequence."""
        if isinstance(value, MosaicLayout):
            return value
        if isinstance(value, str):
            try:
                flat = [int(v) for v in value.replace(" ", "").split(",")]
            except ValueError:
                raise PolarDetError(f"cannot parse layout {value!r}") from None
            if len(flat) != 4:
                raise PolarDetError(f"layout needs four angles, got {value!r}")
            return cls(((flat[0], flat[1]), (flat[2], flat[3])))
        return cls(tuple(tuple(row) for row in value))

    def offset(self, angle):
        """``(row, col)`` cell holding ``angle`` degrees."""
        for r, row in enumerate(self.grid):
            for c, a in enumerate(row):
                if a == angle:
                    return r, c
        raise PolarDetError(f"angle {angle} not in layout")

    def angle_grid(self, height, width):
        """Full-frame array of the polarizer angle (degrees) at each raw pixel."""
        cell = np.array(self.grid)
        return np.tile(cell, (height // 2, width // 2))

    def __str__(self):
        return ",".join(str(a) for row in self.grid for a in row)


DEFAULT_LAYOUT = MosaicLayout()


def split(raw, layout=DEFAULT_LAYOUT):
    """Decimate raw frames into four angle planes.

    Parameters
    ----------
    raw : array-like of shape (..., height, width)
        Even-sized frame or stack of frames.
    layout : MosaicLayout or str, optional

    Returns
    -------
    numpy.ndarray of shape (..., 4, height // 2, width // 2)
        Planes ordered (I0, I45, I90, I135), same dtype as ``raw``.
    """
    raw = check_raw_frame(raw)
    layout = MosaicLayout.parse(layout)
    planes = []
    for angle in ANGLES_DEG:
        r, c = layout.offset(angle)
        planes.append(raw[..., r::2, c::2])
    return np.stack(planes, axis=-3)


def assemble(quad, layout=DEFAULT_LAYOUT):
    """Inverse of :func:`split`: interleave four planes back into a raw frame."""
    quad = np.asarray(quad)
    if quad.ndim < 3 or quad.shape[-3] != 4:
        raise PolarDetError(f"quad must have shape (..., 4, h, w), got {quad.shape}")
    layout = MosaicLayout.parse(layout)
    h, w = quad.shape[-2:]
    raw = np.empty(quad.shape[:-3] + (2 * h, 2 * w), dtype=quad.dtype)
    for k, angle in enumerate(ANGLES_DEG):
        r, c = layout.offset(angle)
        raw[..., r::2, c::2] = quad[..., k, :, :]
    return raw


def quad_to_stokes_image(quad):
    """Pixelwise Stokes recovery: ``(..., 4, h, w)`` -> ``(..., 3, h, w)``."""
    return StokesTransformer().transform(quad)


class Demosaicer(TransformerMixin, BaseEstimator):
    """Split DoFP raw frames into (I0, I45, I90, I135) planes.

    Parameters
    ----------
    layout : str or MosaicLayout, default="0,45,135,90"
        Superpixel arrangement, row-major.

    Examples
    --------
    >>> import numpy as np
    >>> Demosaicer().fit_transform(np.array([[10, 20], [40, 30]]))[:, 0, 0]
    array([10, 20, 30, 40])
    """

    def __init__(self, layout="0,45,135,90"):
        self.layout = layout

    def fit(self, X, y=None):
        X = check_raw_frame(X)
        self.layout_ = MosaicLayout.parse(self.layout)
        self.frame_shape_ = X.shape[-2:]
        return self

    def transform(self, X):
        check_is_fitted(self, "layout_")
        return split(X, self.layout_)

    def inverse_transform(self, X):
        check_is_fitted(self, "layout_")
        return assemble(check_planes(X, 4, name="intensity stack"), self.layout_)
