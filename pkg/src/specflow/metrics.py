"""
Merit function, field comparisons, convergence study and speed histograms.

Fields are passed around as ``(vx, vy)`` pairs of ``H x W`` arrays in
pixels/frame unless noted.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, asdict
from typing import Optional, Sequence, Tuple

import numpy as np

from .cube import ImageCube
from .deriv import interior_mask, pair_derivatives
from .spectral import SpectralVelocity, evaluate, subtract_mean_flow


@dataclass
class FlowMetrics:
    field_distance: float
    relative_error: float
    correlation: float
    rms_speed: float
    median_speed: float
    max_speed: float
    reference_rms: float
    n_pixels: int
    chi2: Optional[float] = None
    chi0: Optional[float] = None

    def to_dict(self):
        return asdict(self)


def default_border(n_x: int, n_y: int, X: int, Y: int) -> int:
    """Half a wavelength of the highest retained mode."""
    parts = [X / (2 * n_x) if n_x > 0 else 0.0, Y / (2 * n_y) if n_y > 0 else 0.0]
    return int(np.ceil(max(parts)))


def _as_grid(v, shape=None):
    if isinstance(v, SpectralVelocity):
        return evaluate(v)
    vx, vy = v
    return np.asarray(vx, float), np.asarray(vy, float)


def _residual_sums(cube: ImageCube, vx, vy, missing):
    h, w = cube.shape[1:]
    mask = interior_mask(h, w)
    chi2 = chi0 = 0.0
    count = 0
    for it, gx, gy in pair_derivatives(cube, missing):
        r = (it + vx * gx + vy * gy)[mask]
        chi2 += float(np.dot(r, r))
        r0 = it[mask]
        chi0 += float(np.dot(r0, r0))
        count += r.size
    return chi2, chi0, count


def merit(cube: ImageCube, v, missing: str = "skip") -> Tuple[float, float]:
    """Summed squared advection residual ``(chi2, chi0)``.

    ``chi2`` uses velocity ``v`` (a SpectralVelocity or a grid pair),
    ``chi0`` the zero field.  Sums run over used pairs and the stencil
    interior, matching what the fit minimises.
    """
    vx, vy = _as_grid(v)
    if vx.shape != cube.shape[1:]:
        raise ValueError(f"velocity grid {vx.shape} != frame shape {cube.shape[1:]}")
    chi2, chi0, _ = _residual_sums(cube, vx, vy, missing)
    return chi2, chi0


def chi_rms(cube: ImageCube, v=None, missing: str = "skip") -> float:
    """Per-pixel, per-pair RMS of the advection residual.

    With ``v=None`` this is the RMS of the time derivative, the natural
    noise yardstick of a cube (counts per frame).
    """
    h, w = cube.shape[1:]
    if v is None:
        vx = vy = np.zeros((h, w))
    else:
        vx, vy = _as_grid(v)
    chi2, _, count = _residual_sums(cube, vx, vy, missing)
    return float(np.sqrt(chi2 / count)) if count else 0.0


def _border_mask(shape, exclude_border):
    h, w = shape
    b = int(exclude_border)
    if 2 * b >= min(h, w):
        raise ValueError(f"border {b} leaves no interior in a {h}x{w} field")
    return interior_mask(h, w, b)


def compare_fields(v, reference, exclude_border: int = 0) -> FlowMetrics:
    """Compare field ``v`` against ``reference`` over the interior.

    ``relative_error`` is the RMS of ``|v - reference|`` over the RMS speed
    of ``reference``; ``correlation`` is the cosine similarity of the
    stacked components (in ``[-1, 1]``).  Speed statistics describe ``v``.
    """
    vx, vy = _as_grid(v)
    rx, ry = _as_grid(reference)
    if vx.shape != rx.shape:
        raise ValueError(f"field shapes differ: {vx.shape} vs {rx.shape}")
    mask = _border_mask(vx.shape, exclude_border)
    a = np.stack([vx[mask], vy[mask]])
    b = np.stack([rx[mask], ry[mask]])
    diff2 = np.sum((a - b) ** 2, axis=0)
    distance = float(np.sqrt(diff2.mean()))
    ref_rms = float(np.sqrt(np.mean(np.sum(b ** 2, axis=0))))
    speed = np.sqrt(np.sum(a ** 2, axis=0))
    na, nb = np.linalg.norm(a), np.linalg.norm(b)
    if na == 0 and nb == 0:
        corr = 1.0
    elif na == 0 or nb == 0:
        corr = 0.0
    else:
        corr = float(np.clip(np.sum(a * b) / (na * nb), -1.0, 1.0))
    rel = distance / ref_rms if ref_rms > 0 else (0.0 if distance == 0 else np.inf)
    return FlowMetrics(field_distance=distance, relative_error=float(rel), correlation=corr,
                       rms_speed=float(np.sqrt(np.mean(speed ** 2))),
                       median_speed=float(np.median(speed)), max_speed=float(speed.max()),
                       reference_rms=ref_rms, n_pixels=int(mask.sum()))


def field_distance(v1, v2, exclude_border: int = 0) -> float:
    return compare_fields(v1, v2, exclude_border).field_distance


def convergence_windows(n_frames: int, window: int, reference_length: int):
    """Start offsets of ``window``-frame estimates compared to the final reference.

    Windows are confined to the frames before the reference when they fit;
    otherwise they may overlap it.
    """
    prefix = n_frames - reference_length
    if prefix >= window:
        return list(range(0, prefix - window + 1))
    return [j for j in range(0, prefix) if j + window <= n_frames]


def convergence_study(cube: ImageCube, n_x: int, n_y: Optional[int], window_lengths: Sequence[int],
                      exclude_border: Optional[int] = None, solver: str = "direct",
                      missing: str = "skip"):
    """Distance of short-window estimates to a long-window reference.

    The reference is the estimate over the final ``max(window_lengths)``
    frames.  For each window length ``N``, estimates from every admissible
    start offset are compared with the reference after removing both mean
    flows, and the distances averaged.

    Returns a list of ``(N, mean_distance)``.
    """
    from .solve import estimate

    n_y = n_x if n_y is None else n_y
    lengths = sorted(int(n) for n in window_lengths)
    if not lengths or lengths[0] < 2:
        raise ValueError("window lengths must be >= 2")
    ref_len = lengths[-1]
    t = cube.n_frames
    if t < ref_len + 1:
        raise ValueError(f"cube has {t} frames; need at least {ref_len + 1} "
                         f"for a {ref_len}-frame reference plus one offset")
    h, w = cube.shape[1:]
    if exclude_border is None:
        exclude_border = default_border(n_x, n_y, w, h)
    ref, _ = estimate(cube.subcube(t - ref_len, t), n_x, n_y, solver=solver, missing=missing)
    ref_grid = evaluate(subtract_mean_flow(ref))
    table = []
    for n in lengths:
        starts = convergence_windows(t, n, ref_len)
        dists = []
        for j in starts:
            v, _ = estimate(cube.subcube(j, j + n), n_x, n_y, solver=solver, missing=missing)
            dists.append(field_distance(evaluate(subtract_mean_flow(v)), ref_grid, exclude_border))
        table.append((n, float(np.mean(dists))))
    return table


def loglog_slope(table) -> float:
    n, d = np.asarray(table, float).T
    return float(np.polyfit(np.log(n), np.log(d), 1)[0])


@dataclass
class SpeedHistogram:
    edges: np.ndarray
    density: np.ndarray
    rms_speed: float
    median_speed: float
    max_speed: float
    unit_scale: float = 1.0

    @property
    def centers(self):
        return 0.5 * (self.edges[1:] + self.edges[:-1])

    @property
    def bin_width(self):
        return float(self.edges[1] - self.edges[0])

    def area(self) -> float:
        return float(np.sum(self.density) * self.bin_width)

    def summary(self):
        return dict(rms_speed=self.rms_speed, median_speed=self.median_speed,
                    max_speed=self.max_speed, unit_scale=self.unit_scale)


def speed_histogram(v, bin_width: float, unit_scale: Optional[float] = None,
                    exclude_border: int = 0) -> SpeedHistogram:
    """Unit-area histogram of speed after removing the mean flow.

    ``unit_scale`` converts pixels/frame to display units (e.g. km/s per
    px/frame); ``bin_width`` is in the display units.
    """
    if bin_width <= 0:
        raise ValueError(f"bin_width must be positive, got {bin_width}")
    scale = 1.0 if unit_scale is None else float(unit_scale)
    vx, vy = _as_grid(v)
    mask = _border_mask(vx.shape, exclude_border)
    ux = vx[mask] - vx[mask].mean()
    uy = vy[mask] - vy[mask].mean()
    speed = np.hypot(ux, uy) * scale
    n_bins = max(1, int(np.floor(speed.max() / bin_width)) + 1)
    edges = np.arange(n_bins + 1) * bin_width
    idx = np.minimum((speed / bin_width).astype(int), n_bins - 1)
    counts = np.bincount(idx, minlength=n_bins)
    density = counts / (speed.size * bin_width)
    return SpeedHistogram(edges, density, float(np.sqrt(np.mean(speed ** 2))),
                          float(np.median(speed)), float(speed.max()), scale)


def boundary_residual_profile(v_true, v_fit) -> np.ndarray:
    """``|v_true - v_fit|`` along the middle row."""
    tx, ty = _as_grid(v_true)
    fx, fy = _as_grid(v_fit)
    if tx.shape != fx.shape:
        raise ValueError(f"field shapes differ: {tx.shape} vs {fx.shape}")
    row = tx.shape[0] // 2
    return np.hypot(tx[row] - fx[row], ty[row] - fy[row])


def gibbs_decay(profile, distance: float):
    """How far boundary error has decayed ``distance`` pixels in from each edge.

    For each half of ``profile`` the peak beyond ``distance`` from its edge
    is divided by the peak within ``distance`` of it.  Returns
    ``(interior_peak, edge_peak, ratio)`` for the side with the worse
    (larger) ratio.
    """
    profile = np.asarray(profile, float)
    n = profile.size
    half = n // 2
    worst = None
    for side in (profile[:half], profile[n - half:][::-1]):
        idx = np.arange(side.size)
        edge_peak = float(side[idx <= distance].max())
        inner_peak = float(side[idx > distance].max())
        ratio = inner_peak / edge_peak if edge_peak > 0 else np.inf
        if worst is None or ratio > worst[2]:
            worst = (inner_peak, edge_peak, ratio)
    return worst


def zonal_profile(v) -> np.ndarray:
    """Row-averaged x velocity as a function of row index."""
    vx, _ = _as_grid(v)
    return vx.mean(axis=1)


# ---------------------------------------------------------------------------
# CSV export


def _write_csv(path, header, rows):
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(header)
        for row in rows:
            writer.writerow([repr(float(x)) if not isinstance(x, (int, np.integer)) else int(x)
                             for x in row])


def write_histogram_csv(path, hist: SpeedHistogram) -> None:
    _write_csv(path, ["bin_center", "density"], zip(hist.centers, hist.density))


def write_profile_csv(path, profile) -> None:
    _write_csv(path, ["index", "value"], enumerate(np.asarray(profile, float)))


def write_convergence_csv(path, table) -> None:
    _write_csv(path, ["N", "distance"], table)
