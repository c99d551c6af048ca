"""Input validation helpers for image-shaped arrays.

These play the role ``sklearn.utils.validation.check_array`` plays for
tabular data: every public transformer funnels its input through one of
them so shape and dtype problems surface with a consistent message.
"""

import numpy as np

from ..exceptions import OddDimensionsError, PolarDetError

U16_MAX = 65535


def check_raw_frame(raw, *, allow_float=True):
    """Validate a DoFP raw frame, or a stack of frames, and return it as an array.

    Parameters
    ----------
    raw : array-like of shape (..., height, width)
        Sensor samples. Leading axes index independent frames.
    allow_float : bool, default=True
        Accept floating-point samples (synthetic renders). When False only
        unsigned integer data is accepted.

    Returns
    -------
    numpy.ndarray
        The frame, unchanged in dtype.

    Raises
    ------
    OddDimensionsError
        If height or width is odd.
    PolarDetError
        On wrong rank, negative or non-finite samples, or values above the
        16-bit range.
    """
    raw = np.asarray(raw)
    if raw.ndim < 2:
        raise PolarDetError(f"raw frame must be at least 2-D, got shape {raw.shape}")
    if raw.dtype.kind == "b" or raw.dtype.kind not in "uif":
        raise PolarDetError(f"raw frame must be numeric, got dtype {raw.dtype}")
    if raw.dtype.kind == "f" and not allow_float:
        raise PolarDetError("raw frame must hold unsigned integer samples")
    height, width = raw.shape[-2:]
    if height % 2 or width % 2:
        raise OddDimensionsError(
            f"raw frame dimensions must be even, got {width}x{height} (width x height)"
        )
    if raw.size:
        if raw.dtype.kind == "f" and not np.isfinite(raw).all():
            raise PolarDetError("raw frame contains non-finite samples")
        if raw.min() < 0:
            raise PolarDetError("raw frame contains negative samples")
        if raw.max() > U16_MAX:
            raise PolarDetError("raw frame exceeds the 16-bit sample range")
    return raw


def check_planes(X, n_planes, *, name="image"):
    """Validate a planar image stack ``(..., n_planes, height, width)``.

    Returns the data as a float64 array.
    """
    X = np.asarray(X, dtype=np.float64)
    if X.ndim < 3 or X.shape[-3] != n_planes:
        raise PolarDetError(
            f"{name} must have shape (..., {n_planes}, height, width), got {X.shape}"
        )
    if not np.isfinite(X).all():
        raise PolarDetError(f"{name} contains non-finite values")
    return X


def check_bit_depth(bit_depth):
    if isinstance(bit_depth, bool) or not isinstance(bit_depth, (int, np.integer)):
        raise PolarDetError(f"bit_depth must be an integer, got {bit_depth!r}")
    if not 1 <= bit_depth <= 16:
        raise PolarDetError(f"bit_depth must lie in [1, 16], got {bit_depth}")
    return int(bit_depth)
