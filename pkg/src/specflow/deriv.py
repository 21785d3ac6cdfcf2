"""
Finite-difference derivatives and their time-accumulated products.

The time derivative of a frame pair is the plain difference of the two
frames; the spatial gradient is a centred 4th-order stencil applied to the
pair average, so both refer to the pair midpoint in time.  Pixels within
two of the border have no stencil support and carry zero weight.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import List, Tuple

import numpy as np

from .cube import ImageCube
from .errors import EstimationInputError

BORDER = 2
MISSING_MODES = ("skip", "include")


@dataclass(frozen=True, eq=False)
class DerivativeProducts:
    """Pixel fields summed over all frame pairs used.

    ``sxx``, ``sxy``, ``syy`` are sums of I_x^2, I_x I_y, I_y^2 and
    ``stx``, ``sty`` sums of I_t I_x, I_t I_y.  ``weight`` counts the pair
    contributions per pixel (0 on the stencil rim).
    """

    sxx: np.ndarray
    sxy: np.ndarray
    syy: np.ndarray
    stx: np.ndarray
    sty: np.ndarray
    weight: np.ndarray
    pair_count: int

    @property
    def shape(self):
        return self.sxx.shape


def temporal_derivative(frame_a, frame_b) -> np.ndarray:
    """Forward difference ``frame_b - frame_a`` (counts per frame)."""
    a = np.asarray(frame_a, dtype=np.float64)
    b = np.asarray(frame_b, dtype=np.float64)
    if a.shape != b.shape:
        raise ValueError(f"frame shapes differ: {a.shape} vs {b.shape}")
    return b - a


def interior_mask(height: int, width: int, border: int = BORDER) -> np.ndarray:
    mask = np.zeros((height, width), dtype=bool)
    mask[border:height - border, border:width - border] = True
    return mask


def _d4(m, axis):
    # (-m[+2] + 8 m[+1] - 8 m[-1] + m[-2]) / 12 on the interior, zero on the rim
    out = np.zeros_like(m)
    n = m.shape[axis]
    sl = lambda a, b: tuple(slice(a, b) if ax == axis else slice(None) for ax in range(m.ndim))
    out[sl(2, n - 2)] = (-m[sl(4, n)] + 8.0 * m[sl(3, n - 1)]
                         - 8.0 * m[sl(1, n - 3)] + m[sl(0, n - 4)]) / 12.0
    return out


def spatial_gradient(frame_a, frame_b) -> Tuple[np.ndarray, np.ndarray]:
    """4th-order centred gradient ``(I_x, I_y)`` of the pair average.

    x runs along columns (axis 1), y along rows (axis 0).  The two-pixel
    rim is set to zero.
    """
    a = np.asarray(frame_a, dtype=np.float64)
    b = np.asarray(frame_b, dtype=np.float64)
    if a.shape != b.shape:
        raise ValueError(f"frame shapes differ: {a.shape} vs {b.shape}")
    if a.ndim != 2 or min(a.shape) < 5:
        raise ValueError(f"frames must be 2-D with both sides >= 5, got {a.shape}")
    m = 0.5 * (a + b)
    gx = _d4(m, axis=1)
    gy = _d4(m, axis=0)
    rim = ~interior_mask(*a.shape)
    gx[rim] = 0.0
    gy[rim] = 0.0
    return gx, gy


def frame_pairs(cube: ImageCube, missing: str = "skip") -> List[Tuple[int, int]]:
    """Consecutive frame pairs entering the fit.

    With ``missing="skip"`` a pair is used only if both frames are valid;
    ``"include"`` uses every pair regardless of flags.
    """
    if missing not in MISSING_MODES:
        raise ValueError(f"missing must be one of {MISSING_MODES}, got {missing!r}")
    t = cube.n_frames
    if missing == "include":
        return [(i, i + 1) for i in range(t - 1)]
    v = cube.valid
    return [(i, i + 1) for i in range(t - 1) if v[i] and v[i + 1]]


def pair_derivatives(cube: ImageCube, missing: str = "skip"):
    """Yield ``(I_t, I_x, I_y)`` for every used pair."""
    for i, j in frame_pairs(cube, missing):
        a, b = cube.frames[i], cube.frames[j]
        gx, gy = spatial_gradient(a, b)
        yield temporal_derivative(a, b), gx, gy


def accumulate_products(cube: ImageCube, missing: str = "skip") -> DerivativeProducts:
    """Sum the five derivative products over all usable frame pairs.

    Raises
    ------
    EstimationInputError
        If no consecutive valid pair exists.
    """
    h, w = cube.shape[1:]
    if min(h, w) < 5:
        raise ValueError(f"frames must be at least 5x5, got {h}x{w}")
    acc = np.zeros((5, h, w))
    count = 0
    for it, gx, gy in pair_derivatives(cube, missing):
        acc[0] += gx * gx
        acc[1] += gx * gy
        acc[2] += gy * gy
        acc[3] += it * gx
        acc[4] += it * gy
        count += 1
    if count == 0:
        raise EstimationInputError("cube has no pair of consecutive valid frames")
    mask = interior_mask(h, w)
    acc[:, ~mask] = 0.0
    weight = np.where(mask, float(count), 0.0)
    return DerivativeProducts(*acc, weight=weight, pair_count=count)
