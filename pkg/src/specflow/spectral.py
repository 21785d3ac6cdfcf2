"""
Truncated Fourier representation of a 2-D velocity field.

A :class:`SpectralVelocity` stores complex amplitudes ``alpha`` (x
component) and ``beta`` (y component) on the mode grid
``i in [-n_x, n_x]``, ``j in [-n_y, n_y]``.  Arrays are indexed
``[j + n_y, i + n_x]`` so that row-major order runs over ``i`` fastest.
The field at integer pixel ``(x, y)`` is::

    v_x(x, y) = sum_ij alpha_ij * exp(-2 pi 1j (i x / X + j y / Y))

which is exactly ``numpy.fft.fft2`` of the amplitudes scattered onto the
``Y x X`` grid.  Real fields need ``alpha(-i, -j) == conj(alpha(i, j))``.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass
from typing import Tuple

import numpy as np

from .errors import CubeFormatError, CubeSizeError

MAGIC = b"OFV1"
_HEADER = struct.Struct("<4sIIII")


@dataclass(frozen=True, eq=False)
class SpectralVelocity:
    """Fourier amplitudes of a velocity field (pixels/frame)."""

    n_x: int
    n_y: int
    X: int
    Y: int
    alpha: np.ndarray
    beta: np.ndarray

    def __post_init__(self):
        shape = (2 * self.n_y + 1, 2 * self.n_x + 1)
        for name in ("alpha", "beta"):
            a = np.array(getattr(self, name), dtype=np.complex128)
            if a.shape != shape:
                raise ValueError(f"{name} must have shape {shape}, got {a.shape}")
            a.setflags(write=False)
            object.__setattr__(self, name, a)
        if self.n_x < 0 or self.n_y < 0:
            raise ValueError("mode counts must be non-negative")
        if 2 * self.n_x + 1 > self.X or 2 * self.n_y + 1 > self.Y:
            raise ValueError(f"{2 * self.n_x + 1}x{2 * self.n_y + 1} modes do not fit "
                             f"a {self.X}x{self.Y} grid")

    @classmethod
    def zeros(cls, n_x, n_y, X, Y):
        shape = (2 * n_y + 1, 2 * n_x + 1)
        return cls(n_x, n_y, X, Y, np.zeros(shape, complex), np.zeros(shape, complex))

    @property
    def shape(self):
        return self.alpha.shape

    def amplitude(self, i, j):
        """``(alpha_ij, beta_ij)`` by signed mode index."""
        return self.alpha[j + self.n_y, i + self.n_x], self.beta[j + self.n_y, i + self.n_x]

    def with_amplitudes(self, alpha, beta) -> "SpectralVelocity":
        return SpectralVelocity(self.n_x, self.n_y, self.X, self.Y, alpha, beta)

    def scaled(self, c) -> "SpectralVelocity":
        return self.with_amplitudes(self.alpha * c, self.beta * c)

    def __add__(self, other):
        if not isinstance(other, SpectralVelocity):
            return NotImplemented
        if (self.n_x, self.n_y, self.X, self.Y) != (other.n_x, other.n_y, other.X, other.Y):
            raise ValueError("cannot add velocities on different mode grids")
        return self.with_amplitudes(self.alpha + other.alpha, self.beta + other.beta)

    def __neg__(self):
        return self.scaled(-1.0)

    def __sub__(self, other):
        return self + (-other)

    def to_vector(self) -> np.ndarray:
        return np.concatenate([self.alpha.ravel(), self.beta.ravel()])

    @classmethod
    def from_vector(cls, vec, n_x, n_y, X, Y):
        vec = np.asarray(vec)
        shape = (2 * n_y + 1, 2 * n_x + 1)
        m = shape[0] * shape[1]
        if vec.shape != (2 * m,):
            raise ValueError(f"vector length {vec.shape} != {2 * m}")
        return cls(n_x, n_y, X, Y, vec[:m].reshape(shape), vec[m:].reshape(shape))

    def padded(self, n_x, n_y) -> "SpectralVelocity":
        """Embed in a larger mode grid (extra modes zero)."""
        if n_x < self.n_x or n_y < self.n_y:
            raise ValueError("padded grid must not be smaller")
        out = []
        for a in (self.alpha, self.beta):
            big = np.zeros((2 * n_y + 1, 2 * n_x + 1), complex)
            big[n_y - self.n_y:n_y + self.n_y + 1, n_x - self.n_x:n_x + self.n_x + 1] = a
            out.append(big)
        return SpectralVelocity(n_x, n_y, self.X, self.Y, *out)


def conj_flip(a):
    """``a(-i, -j)`` conjugated, i.e. the partner under conjugate symmetry."""
    return np.conj(np.asarray(a)[::-1, ::-1])


def symmetrize(a) -> Tuple[np.ndarray, float]:
    """Project onto conjugate-symmetric amplitudes.

    Returns the projection and the max absolute deviation it removed.
    """
    a = np.asarray(a, dtype=np.complex128)
    sym = 0.5 * (a + conj_flip(a))
    return sym, float(np.max(np.abs(a - sym), initial=0.0))


def symmetrized(v: SpectralVelocity) -> Tuple[SpectralVelocity, float]:
    alpha, da = symmetrize(v.alpha)
    beta, db = symmetrize(v.beta)
    return v.with_amplitudes(alpha, beta), max(da, db)


def _scatter(a, n_x, n_y, height, width):
    grid = np.zeros((height, width), dtype=np.complex128)
    jj = np.arange(-n_y, n_y + 1) % height
    ii = np.arange(-n_x, n_x + 1) % width
    grid[np.ix_(jj, ii)] = a
    return grid


def evaluate_complex(v: SpectralVelocity, height=None, width=None):
    height = v.Y if height is None else height
    width = v.X if width is None else width
    if (height, width) != (v.Y, v.X):
        raise ValueError(f"grid {height}x{width} does not match velocity domain {v.Y}x{v.X}")
    vx = np.fft.fft2(_scatter(v.alpha, v.n_x, v.n_y, height, width))
    vy = np.fft.fft2(_scatter(v.beta, v.n_x, v.n_y, height, width))
    return vx, vy


def evaluate(v: SpectralVelocity, height=None, width=None) -> Tuple[np.ndarray, np.ndarray]:
    """Velocity components ``(v_x, v_y)`` on the ``height x width`` pixel grid.

    The imaginary part (nonzero only for non-symmetric amplitudes) is
    discarded.
    """
    vx, vy = evaluate_complex(v, height, width)
    return vx.real.copy(), vy.real.copy()


def _phasors(t, n, period):
    # exp(-2 pi 1j m t / period) for m = -n..n via powers of one phasor
    base = np.exp(-2j * np.pi / period * t)
    out = np.empty(t.shape + (2 * n + 1,), complex)
    out[..., n] = 1.0
    if n:
        np.cumprod(np.broadcast_to(base[..., None], t.shape + (n,)), axis=-1, out=out[..., n + 1:])
        np.conjugate(out[..., :n:-1], out=out[..., :n])
    return out


def evaluate_at(v: SpectralVelocity, x, y) -> Tuple[np.ndarray, np.ndarray]:
    """Velocity at arbitrary (non-integer) positions by direct summation."""
    x = np.asarray(x, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    ex = _phasors(x, v.n_x, v.X)
    ey = _phasors(y, v.n_y, v.Y)
    # sum_j ey[..., j] * sum_i a[j, i] ex[..., i]
    vx = np.einsum("...j,...j->...", ey, ex @ v.alpha.T)
    vy = np.einsum("...j,...j->...", ey, ex @ v.beta.T)
    return vx.real, vy.real


def mean_flow(v: SpectralVelocity) -> Tuple[float, float]:
    """Uniform (camera-motion-like) part of the field: the (0, 0) mode."""
    a, b = v.amplitude(0, 0)
    return float(a.real), float(b.real)


def subtract_mean_flow(v: SpectralVelocity) -> SpectralVelocity:
    alpha = v.alpha.copy()
    beta = v.beta.copy()
    alpha[v.n_y, v.n_x] = 0.0
    beta[v.n_y, v.n_x] = 0.0
    return v.with_amplitudes(alpha, beta)


def field_rms(v: SpectralVelocity) -> float:
    """RMS speed over the grid, from Parseval (exact for symmetric amplitudes)."""
    return float(np.sqrt(np.sum(np.abs(v.alpha) ** 2) + np.sum(np.abs(v.beta) ** 2)))


def random_field(n_x: int, n_y: int, target_rms: float, seed: int, X: int, Y: int) -> SpectralVelocity:
    """Random real field with a flat spectrum over the retained modes.

    Complex amplitudes are drawn i.i.d. normal, symmetrised, and rescaled so
    the grid RMS of ``|v|`` equals ``target_rms``.
    """
    if target_rms < 0:
        raise ValueError(f"target_rms must be non-negative, got {target_rms}")
    shape = (2 * n_y + 1, 2 * n_x + 1)
    if target_rms == 0:
        return SpectralVelocity.zeros(n_x, n_y, X, Y)
    rng = np.random.default_rng(seed)
    raw = rng.standard_normal((2, 2) + shape)
    alpha, _ = symmetrize(raw[0, 0] + 1j * raw[0, 1])
    beta, _ = symmetrize(raw[1, 0] + 1j * raw[1, 1])
    v = SpectralVelocity(n_x, n_y, X, Y, alpha, beta)
    vx, vy = evaluate(v)
    rms = np.sqrt(np.mean(vx ** 2 + vy ** 2))
    return v.scaled(target_rms / rms)


HEX_ANGLES = np.deg2rad([0.0, 120.0, 240.0])


def hexagonal_potential(x, y, wavelength, center=(0.0, 0.0)):
    k = 2 * np.pi / wavelength
    dx = np.asarray(x, float) - center[0]
    dy = np.asarray(y, float) - center[1]
    return sum(np.cos(k * (np.cos(a) * dx + np.sin(a) * dy)) for a in HEX_ANGLES)


def hexagonal_velocity(x, y, amplitude, wavelength, center=(0.0, 0.0)):
    """Gradient of the hexagonal cell potential times ``amplitude``, at any points."""
    k = 2 * np.pi / wavelength
    dx = np.asarray(x, float) - center[0]
    dy = np.asarray(y, float) - center[1]
    vx = np.zeros(np.broadcast(dx, dy).shape)
    vy = np.zeros_like(vx)
    for a in HEX_ANGLES:
        kx, ky = k * np.cos(a), k * np.sin(a)
        s = np.sin(kx * dx + ky * dy)
        vx -= amplitude * kx * s
        vy -= amplitude * ky * s
    return vx, vy


def hexagonal_field(amplitude: float, wavelength: float, X: int, Y: int,
                    center=(0.0, 0.0)) -> Tuple[np.ndarray, np.ndarray]:
    """Divergent flow of a hexagonal cell pattern sampled on the pixel grid.

    ``v = amplitude * grad(phi)`` with ``phi = sum_m cos(k_m . r)`` and unit
    wavevectors at 0, 120 and 240 degrees scaled to ``2 pi / wavelength``.
    The field is generally not periodic on the ``X x Y`` domain.
    """
    if wavelength <= 0:
        raise ValueError(f"wavelength must be positive, got {wavelength}")
    y, x = np.mgrid[0:Y, 0:X].astype(float)
    return hexagonal_velocity(x, y, amplitude, wavelength, center)


def grid_to_spectral(vx, vy) -> SpectralVelocity:
    """Largest centred mode grid reproducing a sampled field.

    Lossless for odd sizes; for even sizes the Nyquist row/column is
    dropped.
    """
    vx = np.asarray(vx, float)
    vy = np.asarray(vy, float)
    Y, X = vx.shape
    n_x, n_y = (X - 1) // 2, (Y - 1) // 2
    jj = np.arange(-n_y, n_y + 1) % Y
    ii = np.arange(-n_x, n_x + 1) % X
    ax = np.fft.ifft2(vx)[np.ix_(jj, ii)]
    ay = np.fft.ifft2(vy)[np.ix_(jj, ii)]
    return SpectralVelocity(n_x, n_y, X, Y, ax, ay)


# ---------------------------------------------------------------------------
# file I/O


def save_velocity(v: SpectralVelocity, path) -> None:
    """Write ``.ofv``: header then alpha then beta as (re, im) f64 pairs."""
    with open(path, "wb") as fh:
        fh.write(_HEADER.pack(MAGIC, v.n_x, v.n_y, v.X, v.Y))
        for a in (v.alpha, v.beta):
            fh.write(np.ascontiguousarray(a, dtype="<c16").tobytes())


def load_velocity(path) -> SpectralVelocity:
    with open(path, "rb") as fh:
        raw = fh.read()
    if len(raw) < _HEADER.size:
        raise CubeFormatError(f"{path}: truncated header")
    magic, n_x, n_y, X, Y = _HEADER.unpack_from(raw)
    if magic != MAGIC:
        raise CubeFormatError(f"{path}: bad magic {magic!r}, expected {MAGIC!r}")
    m = (2 * n_x + 1) * (2 * n_y + 1)
    if len(raw) != _HEADER.size + 2 * m * 16:
        raise CubeSizeError(f"{path}: payload does not match {2 * n_x + 1}x{2 * n_y + 1} modes")
    data = np.frombuffer(raw, dtype="<c16", offset=_HEADER.size).astype(np.complex128)
    shape = (2 * n_y + 1, 2 * n_x + 1)
    return SpectralVelocity(n_x, n_y, X, Y, data[:m].reshape(shape), data[m:].reshape(shape))


def save_grid_csv(path, vx, vy, scale: float = 1.0) -> None:
    """Evaluated field as CSV with columns ``x, y, vx, vy``."""
    vx = np.asarray(vx)
    y, x = np.indices(vx.shape)
    table = np.column_stack([x.ravel(), y.ravel(), vx.ravel() * scale, np.asarray(vy).ravel() * scale])
    np.savetxt(path, table, delimiter=",", header="x,y,vx,vy", comments="",
               fmt=["%d", "%d", "%.17g", "%.17g"])


def load_grid_csv(path) -> Tuple[np.ndarray, np.ndarray]:
    table = np.loadtxt(path, delimiter=",", skiprows=1, ndmin=2)
    x = table[:, 0].astype(int)
    y = table[:, 1].astype(int)
    h, w = y.max() + 1, x.max() + 1
    vx = np.zeros((h, w))
    vy = np.zeros((h, w))
    vx[y, x] = table[:, 2]
    vy[y, x] = table[:, 3]
    return vx, vy
