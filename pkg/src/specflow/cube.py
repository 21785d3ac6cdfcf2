"""
Image cube data model and file I/O.

An :class:`ImageCube` is a ``T x H x W`` stack of intensity frames with a
per-frame validity flag.  Invalid frames never take part in a derivative
pair.  Cubes are immutable; every operation returns a new cube.

On-disk format (``.ofc``, little-endian)::

    magic   b"OFC1"
    u32     T, H, W
    u32     dtype code (0 = float32, 1 = float64)
    f64     pixel_scale (0 when unset)
    f64     cadence     (0 when unset)
    u8[T]   validity flags (1 = valid)
    data    T*H*W values, frame-major, row-major
"""

from __future__ import annotations

import os
import struct
from dataclasses import dataclass, field
from typing import Iterable, Optional, Sequence

import numpy as np

from .errors import CubeFormatError, CubeSizeError

MAGIC = b"OFC1"
_HEADER = struct.Struct("<4sIIIIdd")
_DTYPES = {0: np.dtype("<f4"), 1: np.dtype("<f8")}
_CODES = {np.dtype("<f4"): 0, np.dtype("<f8"): 1}


def _frozen(a, dtype):
    a = np.array(a, dtype=dtype, copy=True)
    a.setflags(write=False)
    return a


@dataclass(frozen=True, eq=False)
class ImageCube:
    """Time sequence of 2-D intensity frames.

    Parameters
    ----------
    frames : array_like, shape (T, H, W)
        Intensities in counts.  Stored as float64.
    valid : array_like of bool, shape (T,), optional
        Frame usability flags.  Defaults to all valid.
    pixel_scale : float, optional
        Physical length per pixel (e.g. km/px).
    cadence : float, optional
        Time per frame (e.g. s/frame).
    """

    frames: np.ndarray
    valid: np.ndarray = field(default=None)
    pixel_scale: Optional[float] = None
    cadence: Optional[float] = None

    def __post_init__(self):
        frames = np.asarray(self.frames)
        if frames.ndim != 3:
            raise ValueError(f"frames must be 3-D (T, H, W), got shape {frames.shape}")
        if not np.all(np.isfinite(frames)):
            raise ValueError("frames contain non-finite values")
        valid = self.valid
        if valid is None:
            valid = np.ones(frames.shape[0], dtype=bool)
        valid = np.asarray(valid, dtype=bool)
        if valid.shape != (frames.shape[0],):
            raise ValueError(f"valid must have shape ({frames.shape[0]},), got {valid.shape}")
        object.__setattr__(self, "frames", _frozen(frames, np.float64))
        object.__setattr__(self, "valid", _frozen(valid, bool))
        for name in ("pixel_scale", "cadence"):
            value = getattr(self, name)
            if value is not None:
                value = float(value)
                object.__setattr__(self, name, value if value > 0 else None)

    @property
    def shape(self):
        return self.frames.shape

    @property
    def n_frames(self) -> int:
        return self.frames.shape[0]

    @property
    def height(self) -> int:
        return self.frames.shape[1]

    @property
    def width(self) -> int:
        return self.frames.shape[2]

    def replace(self, **changes) -> "ImageCube":
        """Return a copy with some fields replaced."""
        kw = dict(frames=self.frames, valid=self.valid,
                  pixel_scale=self.pixel_scale, cadence=self.cadence)
        kw.update(changes)
        return ImageCube(**kw)

    def reversed(self) -> "ImageCube":
        """Same cube with frame order reversed."""
        return self.replace(frames=self.frames[::-1], valid=self.valid[::-1])

    def subcube(self, start: int, stop: int) -> "ImageCube":
        return self.replace(frames=self.frames[start:stop], valid=self.valid[start:stop])

    def __eq__(self, other):
        if not isinstance(other, ImageCube):
            return NotImplemented
        return (self.frames.shape == other.frames.shape
                and np.array_equal(self.frames, other.frames)
                and np.array_equal(self.valid, other.valid)
                and self.pixel_scale == other.pixel_scale
                and self.cadence == other.cadence)

    __hash__ = None


def blank_frames(frames: np.ndarray) -> np.ndarray:
    """Flags of all-zero frames, only when the cube also holds data.

    A cube made entirely of zeros is left alone: there is nothing to tell a
    dropout from.
    """
    frames = np.asarray(frames)
    blank = ~np.any(frames != 0, axis=(1, 2))
    if blank.all():
        return np.zeros_like(blank)
    return blank


# ---------------------------------------------------------------------------
# file I/O


def save_cube(cube: ImageCube, path, dtype="f8") -> None:
    """Write ``cube`` to ``path`` in ``.ofc`` format.

    ``dtype`` selects the on-disk width: ``"f8"`` (exact) or ``"f4"``.
    """
    dt = np.dtype(dtype).newbyteorder("<")
    if dt not in _CODES:
        raise ValueError(f"unsupported on-disk dtype {dtype!r}")
    t, h, w = cube.shape
    header = _HEADER.pack(MAGIC, t, h, w, _CODES[dt],
                          cube.pixel_scale or 0.0, cube.cadence or 0.0)
    with open(path, "wb") as fh:
        fh.write(header)
        fh.write(cube.valid.astype(np.uint8).tobytes())
        fh.write(np.ascontiguousarray(cube.frames, dtype=dt).tobytes())


def load_cube(path, detect_blank: bool = True) -> ImageCube:
    """Read an ``.ofc`` file.

    All-zero frames in a cube that also contains data are flagged invalid
    (dropout detection) unless ``detect_blank`` is False.

    Raises
    ------
    CubeFormatError
        Bad magic, truncated header or unknown dtype code.
    CubeSizeError
        Payload length disagrees with the header dimensions.
    """
    with open(path, "rb") as fh:
        raw = fh.read()
    if len(raw) < _HEADER.size:
        raise CubeFormatError(f"{path}: truncated header")
    magic, t, h, w, code, pixel_scale, cadence = _HEADER.unpack_from(raw)
    if magic != MAGIC:
        raise CubeFormatError(f"{path}: bad magic {magic!r}, expected {MAGIC!r}")
    if code not in _DTYPES:
        raise CubeFormatError(f"{path}: unknown dtype code {code}")
    dt = _DTYPES[code]
    expected = _HEADER.size + t + t * h * w * dt.itemsize
    if expected != len(raw):
        raise CubeSizeError(f"{path}: header says {t}x{h}x{w} ({expected} bytes), "
                            f"file has {len(raw)} bytes")
    off = _HEADER.size
    valid = np.frombuffer(raw, dtype=np.uint8, count=t, offset=off).astype(bool)
    frames = np.frombuffer(raw, dtype=dt, count=t * h * w, offset=off + t)
    frames = frames.reshape(t, h, w).astype(np.float64)
    if detect_blank:
        valid = valid & ~blank_frames(frames)
    return ImageCube(frames, valid, pixel_scale or None, cadence or None)


def read_pgm(path) -> np.ndarray:
    """Read a binary (P5) PGM image as a float64 array."""
    with open(path, "rb") as fh:
        data = fh.read()
    tokens = []
    pos = 0
    while len(tokens) < 4:
        while pos < len(data) and data[pos:pos + 1].isspace():
            pos += 1
        if data[pos:pos + 1] == b"#":
            while pos < len(data) and data[pos:pos + 1] not in (b"\n", b"\r"):
                pos += 1
            continue
        start = pos
        while pos < len(data) and not data[pos:pos + 1].isspace():
            pos += 1
        if start == pos:
            raise CubeFormatError(f"{path}: truncated PGM header")
        tokens.append(data[start:pos])
    pos += 1  # single whitespace byte after maxval
    if tokens[0] != b"P5":
        raise CubeFormatError(f"{path}: not a binary PGM (magic {tokens[0]!r})")
    w, h, maxval = (int(tok) for tok in tokens[1:])
    dt = np.dtype("u1") if maxval < 256 else np.dtype(">u2")
    if len(data) - pos < w * h * dt.itemsize:
        raise CubeSizeError(f"{path}: PGM payload shorter than {w}x{h}")
    img = np.frombuffer(data, dtype=dt, count=w * h, offset=pos)
    return img.reshape(h, w).astype(np.float64)


def write_pgm(path, image, maxval=None) -> None:
    """Write a 2-D array as a P5 PGM (values rounded and clipped)."""
    image = np.asarray(image)
    if maxval is None:
        maxval = 255 if image.max(initial=0) < 256 else 65535
    dt = np.dtype("u1") if maxval < 256 else np.dtype(">u2")
    h, w = image.shape
    with open(path, "wb") as fh:
        fh.write(b"P5\n%d %d\n%d\n" % (w, h, maxval))
        fh.write(np.clip(np.rint(image), 0, maxval).astype(dt).tobytes())


def cube_from_pgm(paths: Sequence[os.PathLike], **meta) -> ImageCube:
    frames = np.stack([read_pgm(p) for p in paths])
    return ImageCube(frames, ~blank_frames(frames), **meta)


# ---------------------------------------------------------------------------
# transformations


def add_gaussian_noise(cube: ImageCube, sigma: float, seed: int = 0) -> ImageCube:
    """Add independent N(0, sigma^2) noise to every pixel of every valid frame."""
    if sigma < 0:
        raise ValueError(f"sigma must be non-negative, got {sigma}")
    if sigma == 0:
        return cube.replace()
    rng = np.random.default_rng(seed)
    noise = rng.standard_normal(cube.shape) * sigma
    noise[~cube.valid] = 0.0
    return cube.replace(frames=cube.frames + noise)


def apply_gradient(cube: ImageCube, profile) -> ImageCube:
    """Multiply every frame by a fixed positive ``H x W`` scale field."""
    profile = np.asarray(profile, dtype=np.float64)
    if profile.shape != cube.shape[1:]:
        raise ValueError(f"profile shape {profile.shape} != frame shape {cube.shape[1:]}")
    if not np.all(profile > 0):
        raise ValueError("profile entries must be strictly positive")
    return cube.replace(frames=cube.frames * profile)


def ramp_profile(height: int, width: int, low: float = 0.5, high: float = 1.5,
                 axis: int = 1) -> np.ndarray:
    """Linear ramp from ``low`` to ``high`` along ``axis`` (1 = across x)."""
    if axis == 1:
        return np.broadcast_to(np.linspace(low, high, width), (height, width)).copy()
    return np.broadcast_to(np.linspace(low, high, height)[:, None], (height, width)).copy()


def mark_missing(cube: ImageCube, indices: Iterable[int]) -> ImageCube:
    """Flag the given frames as invalid."""
    valid = cube.valid.copy()
    for i in indices:
        if not 0 <= i < cube.n_frames:
            raise ValueError(f"frame index {i} out of range [0, {cube.n_frames})")
        valid[i] = False
    return cube.replace(valid=valid)


def blank_missing(cube: ImageCube) -> ImageCube:
    """Zero the data of invalid frames, as an instrument dropout would."""
    frames = cube.frames.copy()
    frames[~cube.valid] = 0.0
    return cube.replace(frames=frames)
