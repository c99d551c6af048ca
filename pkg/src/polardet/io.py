"""Raw frame and encoded image file formats.

Binary PGM (P5) is parsed here rather than through Pillow because Pillow
rescales samples to 16 bits and drops ``maxval``, which is the only record
of the sensor bit depth the file carries.
"""

import os
import re
from dataclasses import dataclass
from pathlib import Path

import numpy as np
from PIL import Image

from .exceptions import PolarDetError

_PGM_TOKEN = re.compile(rb"(?:\s|#[^\n]*\n?)*(\S+)")


@dataclass(frozen=True)
class RawImage:
    """A raw frame read from disk together with its sample range."""

    data: np.ndarray
    maxval: int

    @property
    def bit_depth(self):
        return int(self.maxval).bit_length()


def read_pgm(path):
    """Read a binary (P5) PGM file into a ``uint16`` or ``uint8`` array."""
    buf = Path(path).read_bytes()
    pos = 0
    fields = []
    for _ in range(4):
        m = _PGM_TOKEN.match(buf, pos)
        if m is None:
            raise PolarDetError(f"{path}: truncated PGM header")
        fields.append(m.group(1))
        pos = m.end()
    magic, width, height, maxval = fields
    if magic != b"P5":
        raise PolarDetError(f"{path}: not a binary PGM (magic {magic!r})")
    try:
        width, height, maxval = int(width), int(height), int(maxval)
    except ValueError:
        raise PolarDetError(f"{path}: malformed PGM header") from None
    if not 0 < maxval <= 65535:
        raise PolarDetError(f"{path}: PGM maxval {maxval} out of range")
    # exactly one whitespace byte separates header from raster
    pos += 1
    dtype = np.dtype(">u2") if maxval > 255 else np.dtype("u1")
    expected = width * height * dtype.itemsize
    raster = buf[pos:pos + expected]
    if len(raster) != expected:
        raise PolarDetError(f"{path}: PGM raster has {len(raster)} bytes, expected {expected}")
    data = np.frombuffer(raster, dtype=dtype).reshape(height, width)
    if data.size and data.max() > maxval:
        raise PolarDetError(f"{path}: sample exceeds maxval {maxval}")
    return RawImage(data.astype(np.uint16 if maxval > 255 else np.uint8), maxval)


def write_pgm(path, data, maxval=None):
    """Write a 2-D integer array as binary PGM (big-endian when ``maxval > 255``)."""
    data = np.asarray(data)
    if data.ndim != 2:
        raise PolarDetError(f"PGM data must be 2-D, got shape {data.shape}")
    if data.dtype.kind not in "ui":
        raise PolarDetError("PGM data must be integer; round float renders first")
    if maxval is None:
        maxval = 255 if data.dtype.itemsize == 1 else 65535
    if data.size and (data.min() < 0 or data.max() > maxval):
        raise PolarDetError(f"PGM samples must lie in [0, {maxval}]")
    dtype = ">u2" if maxval > 255 else "u1"
    height, width = data.shape
    header = f"P5\n{width} {height}\n{maxval}\n".encode("ascii")
    _write_bytes(path, header + data.astype(dtype).tobytes())


def read_raw(path):
    """Read a raw DoFP frame from a 16-bit PGM or grayscale PNG."""
    path = Path(path)
    if path.suffix.lower() in (".pgm", ".pnm"):
        return read_pgm(path)
    with Image.open(path) as im:
        if im.mode in ("I;16", "I;16B", "I;16L"):
            return RawImage(np.array(im, dtype=np.uint16), 65535)
        if im.mode == "L":
            return RawImage(np.array(im, dtype=np.uint8), 255)
        if im.mode == "I":
            data = np.array(im)
            if data.size and (data.min() < 0 or data.max() > 65535):
                raise PolarDetError(f"{path}: samples outside 16-bit range")
            return RawImage(data.astype(np.uint16), 65535)
        raise PolarDetError(f"{path}: expected single-channel image, got mode {im.mode}")


def write_png(path, img):
    """Write an 8-bit image, ``(h, w, 3)`` RGB-ordered or ``(h, w)`` gray, as PNG.

    Pillow writes no timestamps, so identical arrays give identical bytes.
    ``img`` may also be an object exposing a ``pixels`` array.
    """
    pixels = np.asarray(getattr(img, "pixels", img))
    if pixels.dtype != np.uint8:
        raise PolarDetError(f"PNG writer expects uint8 samples, got {pixels.dtype}")
    if pixels.ndim == 3 and pixels.shape[-1] == 3:
        mode = "RGB"
    elif pixels.ndim == 2:
        mode = "L"
    else:
        raise PolarDetError(f"cannot write image of shape {pixels.shape} as PNG")
    _save_pillow(path, Image.fromarray(np.ascontiguousarray(pixels), mode=mode))


def write_png16(path, plane):
    """Write one 16-bit grayscale plane as PNG."""
    plane = np.asarray(plane)
    if plane.ndim != 2 or plane.dtype.kind not in "ui":
        raise PolarDetError("16-bit PNG plane must be a 2-D integer array")
    if plane.size and (plane.min() < 0 or plane.max() > 65535):
        raise PolarDetError("16-bit PNG samples must lie in [0, 65535]")
    _save_pillow(path, Image.fromarray(np.ascontiguousarray(plane.astype(np.uint16))))


def read_png(path):
    """Decode a PNG into a numpy array (RGB as ``(h, w, 3)``)."""
    with Image.open(path) as im:
        return np.array(im)


def _save_pillow(path, image):
    tmp = Path(f"{path}.tmp")
    image.save(tmp, format="PNG")
    os.replace(tmp, path)


def _write_bytes(path, payload):
    tmp = Path(f"{path}.tmp")
    tmp.write_bytes(payload)
    os.replace(tmp, path)
