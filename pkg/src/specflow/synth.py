"""
Synthetic ground-truth cubes: a seed image carried along by a known steady
flow.

Frame ``t`` samples the seed at the foot of the characteristic that ends
at each pixel after ``t`` frames, so the cube solves
``dI/dt + v . grad I = 0`` to the accuracy of the trajectory integration
(RK4 substeps) and of the seed interpolation.  ``"spectral"``
interpolation treats the seed as a periodic band-limited function and
evaluates its Fourier series exactly at the off-grid points with a
non-uniform FFT.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Tuple, Union

import finufft
import numpy as np
from scipy import ndimage

from .cube import ImageCube
from .spectral import SpectralVelocity, evaluate, evaluate_at

INTERPOLATIONS = ("bicubic", "spectral")
BOUNDARIES = ("periodic", "clamp")
NUFFT_EPS = 1e-14
MAX_FRAME_DISPLACEMENT = 2.0
DIRECT_SUM_MODES = 200


@dataclass(frozen=True)
class AdvectionConfig:
    n_frames: int = 10
    substeps: int = 2
    interpolation: str = "spectral"
    boundary: str = "periodic"

    def __post_init__(self):
        if self.n_frames < 2:
            raise ValueError(f"n_frames must be >= 2, got {self.n_frames}")
        if self.substeps < 1:
            raise ValueError(f"substeps must be >= 1, got {self.substeps}")
        if self.interpolation not in INTERPOLATIONS:
            raise ValueError(f"interpolation must be one of {INTERPOLATIONS}")
        if self.boundary not in BOUNDARIES:
            raise ValueError(f"boundary must be one of {BOUNDARIES}")


class PeriodicSampler:
    """Exact evaluation of a periodic grid function's Fourier series at arbitrary points."""

    def __init__(self, fields):
        fields = np.asarray(fields, dtype=np.float64)
        self.single = fields.ndim == 2
        if self.single:
            fields = fields[None]
        self.n, self.h, self.w = fields.shape
        coef = np.fft.fft2(fields) / (self.h * self.w)
        # a lone Nyquist bin has no unique real interpolant: split it evenly
        for axis, size in ((1, self.h), (2, self.w)):
            if size % 2 == 0:
                idx = [slice(None)] * 3
                idx[axis] = size // 2
                coef[tuple(idx)] *= 0.5
        pad_h = self.h + (self.h % 2 == 0)
        pad_w = self.w + (self.w % 2 == 0)
        centred = np.fft.fftshift(coef, axes=(1, 2))
        if pad_h != self.h or pad_w != self.w:
            big = np.zeros((self.n, pad_h, pad_w), complex)
            big[:, :self.h, :self.w] = centred
            # mirror the halved Nyquist bin onto the positive side
            if pad_h != self.h:
                big[:, self.h, :self.w] = centred[:, 0, :]
            if pad_w != self.w:
                big[:, :, self.w] = big[:, :, 0]
            centred = big
        self.coef = np.ascontiguousarray(centred)

    def __call__(self, x, y):
        x = np.asarray(x, dtype=np.float64)
        y = np.asarray(y, dtype=np.float64)
        shape = np.broadcast(x, y).shape
        ty = np.ascontiguousarray(np.broadcast_to(2 * np.pi * y / self.h, shape).ravel())
        tx = np.ascontiguousarray(np.broadcast_to(2 * np.pi * x / self.w, shape).ravel())
        ty = np.mod(ty + np.pi, 2 * np.pi) - np.pi
        tx = np.mod(tx + np.pi, 2 * np.pi) - np.pi
        coef = self.coef if self.n > 1 else self.coef[0]
        out = finufft.nufft2d2(ty, tx, coef, eps=NUFFT_EPS, isign=1).real
        out = out.reshape((self.n,) + shape) if self.n > 1 else out.reshape(shape)
        return out


class SplineSampler:
    """Cubic B-spline interpolation of grid fields (``map_coordinates`` order 3)."""

    def __init__(self, fields, boundary="periodic"):
        fields = np.asarray(fields, dtype=np.float64)
        self.single = fields.ndim == 2
        self.fields = fields[None] if self.single else fields
        self.mode = "grid-wrap" if boundary == "periodic" else "nearest"
        self.coef = [ndimage.spline_filter(f, order=3, mode=self.mode) for f in self.fields]

    def __call__(self, x, y):
        x, y = np.broadcast_arrays(np.asarray(x, float), np.asarray(y, float))
        out = np.stack([ndimage.map_coordinates(c, [y, x], order=3, mode=self.mode,
                                                prefilter=False) for c in self.coef])
        return out[0] if self.single else out


def _sampler(fields, interpolation, boundary):
    if interpolation == "spectral":
        return PeriodicSampler(fields)
    return SplineSampler(fields, boundary)


VelocityLike = Union[Tuple[np.ndarray, np.ndarray], SpectralVelocity,
                     Callable[[np.ndarray, np.ndarray], Tuple[np.ndarray, np.ndarray]]]


def velocity_function(velocity: VelocityLike, shape, config: AdvectionConfig):
    """Normalise a velocity specification to ``f(x, y) -> (vx, vy)`` plus its grid values."""
    h, w = shape
    y, x = np.mgrid[0:h, 0:w].astype(float)
    if isinstance(velocity, SpectralVelocity):
        if (velocity.Y, velocity.X) != (h, w):
            raise ValueError("velocity domain does not match seed shape")
        grid = evaluate(velocity)
        if velocity.alpha.size <= DIRECT_SUM_MODES:
            return (lambda px, py: evaluate_at(velocity, px, py)), grid
        # a trigonometric polynomial below Nyquist is reproduced exactly from its samples
        sampler = PeriodicSampler(np.stack(grid))
        return (lambda px, py: tuple(sampler(px, py))), grid
    if callable(velocity):
        return velocity, velocity(x, y)
    vx, vy = (np.asarray(c, dtype=float) for c in velocity)
    if vx.shape != (h, w) or vy.shape != (h, w):
        raise ValueError(f"velocity grids must have shape {(h, w)}")
    sampler = _sampler(np.stack([vx, vy]), config.interpolation, config.boundary)

    def func(px, py):
        out = sampler(px, py)
        return out[0], out[1]
    return func, (vx, vy)


def _wrap_or_clamp(x, y, shape, boundary):
    h, w = shape
    if boundary == "clamp":
        return np.clip(x, 0, w - 1), np.clip(y, 0, h - 1)
    return x, y


def trace_back(x, y, vfunc, duration: float, substeps: int):
    """Move points backward along the steady flow for ``duration`` frames (RK4)."""
    dt = -duration / substeps
    for _ in range(substeps):
        k1 = vfunc(x, y)
        k2 = vfunc(x + 0.5 * dt * k1[0], y + 0.5 * dt * k1[1])
        k3 = vfunc(x + 0.5 * dt * k2[0], y + 0.5 * dt * k2[1])
        k4 = vfunc(x + dt * k3[0], y + dt * k3[1])
        x = x + dt / 6.0 * (k1[0] + 2 * k2[0] + 2 * k3[0] + k4[0])
        y = y + dt / 6.0 * (k1[1] + 2 * k2[1] + 2 * k3[1] + k4[1])
    return x, y


def advect(seed, velocity: VelocityLike, config: AdvectionConfig = AdvectionConfig(),
           **cube_meta) -> ImageCube:
    """Carry ``seed`` along a steady flow for ``config.n_frames - 1`` frames.

    ``velocity`` may be a pair of ``H x W`` grids, a
    :class:`~specflow.spectral.SpectralVelocity`, or a callable
    ``(x, y) -> (vx, vy)`` in pixel coordinates (x along columns).

    Raises
    ------
    ValueError
        If any grid velocity exceeds 2 px per substep; raise ``substeps``.
    """
    seed = np.asarray(seed, dtype=np.float64)
    shape = seed.shape
    vfunc, (gx, gy) = velocity_function(velocity, shape, config)
    vmax = float(np.sqrt(np.max(gx ** 2 + gy ** 2, initial=0.0)))
    if vmax / config.substeps > MAX_FRAME_DISPLACEMENT:
        need = int(np.ceil(vmax / MAX_FRAME_DISPLACEMENT))
        raise ValueError(f"max displacement {vmax:.3g} px per frame exceeds "
                         f"{MAX_FRAME_DISPLACEMENT} px per substep; use substeps >= {need}")

    def bounded(px, py):
        px, py = _wrap_or_clamp(px, py, shape, config.boundary)
        return vfunc(px, py)

    if vmax == 0.0:
        return ImageCube(np.repeat(seed[None], config.n_frames, axis=0), **cube_meta)
    sample = _sampler(seed, config.interpolation, config.boundary)
    h, w = shape
    y0, x0 = np.mgrid[0:h, 0:w].astype(float)
    x, y = x0, y0
    frames = [seed.copy()]
    for _ in range(1, config.n_frames):
        x, y = trace_back(x, y, bounded, 1.0, config.substeps)
        sx, sy = _wrap_or_clamp(x, y, shape, config.boundary)
        frames.append(sample(sx, sy))
    return ImageCube(np.stack(frames), **cube_meta)


def make_texture(width: int, height: int, feature_scale: float, seed: int = 0,
                 bandwidth: float = 0.2) -> np.ndarray:
    """Granulation-like random texture with power near ``1 / feature_scale``.

    White noise is shaped by a Gaussian annulus in wavenumber, centred on
    ``1/feature_scale`` cycles/px with relative width ``bandwidth``.  The
    result is periodic, has zero mean and unit RMS.
    """
    if feature_scale < 2:
        raise ValueError(f"feature_scale must be >= 2 px, got {feature_scale}")
    rng = np.random.default_rng(seed)
    noise = rng.standard_normal((height, width))
    fy = np.fft.fftfreq(height)[:, None]
    fx = np.fft.fftfreq(width)[None, :]
    k = np.hypot(fx, fy)
    k0 = 1.0 / feature_scale
    shaping = np.exp(-0.5 * ((k - k0) / (bandwidth * k0)) ** 2)
    spec = np.fft.fft2(noise) * shaping
    if height % 2 == 0:
        spec[height // 2, :] = 0.0
    if width % 2 == 0:
        spec[:, width // 2] = 0.0
    spec[0, 0] = 0.0
    tex = np.fft.ifft2(spec).real
    tex -= tex.mean()
    return tex / np.sqrt(np.mean(tex ** 2))


def radial_power_spectrum(image, n_bins: int = None):
    """Azimuthally averaged periodogram: ``(frequency, power)`` in cycles/px."""
    image = np.asarray(image, float)
    h, w = image.shape
    power = np.abs(np.fft.fft2(image - image.mean())) ** 2
    k = np.hypot(np.fft.fftfreq(h)[:, None], np.fft.fftfreq(w)[None, :])
    if n_bins is None:
        n_bins = min(h, w) // 2
    edges = np.linspace(0, 0.5, n_bins + 1)
    which = np.digitize(k.ravel(), edges) - 1
    ok = (which >= 0) & (which < n_bins)
    total = np.bincount(which[ok], power.ravel()[ok], minlength=n_bins)
    count = np.bincount(which[ok], minlength=n_bins)
    centres = 0.5 * (edges[1:] + edges[:-1])
    with np.errstate(invalid="ignore", divide="ignore"):
        mean = np.where(count > 0, total / np.maximum(count, 1), 0.0)
    return centres, mean


def traveling_wave(shape, n_frames: int, amplitude: float, wavelength: float,
                   period: float, angle: float = 0.0) -> np.ndarray:
    """Additive plane-wave contaminant ``A cos(k . r - 2 pi t / period)``.

    Stand-in for the oscillatory intensity fluctuations that do not follow
    the flow.
    """
    h, w = shape
    y, x = np.mgrid[0:h, 0:w].astype(float)
    k = 2 * np.pi / wavelength
    phase = k * (np.cos(angle) * x + np.sin(angle) * y)
    t = np.arange(n_frames, dtype=float)[:, None, None]
    return amplitude * np.cos(phase[None] - 2 * np.pi * t / period)
