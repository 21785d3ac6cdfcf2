"""Timing of assembly and both solvers across a mode-count sweep."""

from __future__ import annotations

import time
from typing import Sequence

import numpy as np

from .assemble import assemble_dense, matvec_structured
from .cube import ImageCube
from .deriv import accumulate_products
from .solve import solve_direct, solve_iterative
from .synth import make_texture


def bench_cube(size=256, seed=1) -> ImageCube:
    """Two-frame textured cube with a sub-pixel shift; well conditioned for any n."""
    tex = make_texture(size, size, 8.0, seed=seed)
    k = np.fft.fftfreq(size)
    shift = np.exp(-2j * np.pi * (0.2 * k[None, :] + 0.1 * k[:, None]))
    moved = np.fft.ifft2(np.fft.fft2(tex) * shift).real
    return ImageCube(np.stack([tex, moved]))


def _best_of(fn, repeats):
    best = np.inf
    out = None
    for _ in range(repeats):
        t0 = time.perf_counter()
        out = fn()
        best = min(best, time.perf_counter() - t0)
    return best, out


def scaling_exponent(modes, times) -> float:
    """Slope of log(time) against log(n_x * n_y) for square mode grids."""
    modes = np.asarray(modes, float)
    return float(np.polyfit(np.log(modes ** 2), np.log(times), 1)[0])


def run_bench(modes: Sequence[int] = (4, 8, 12, 16), size=256, repeats=3, tol=1e-8, seed=1):
    """Time assembly, direct and iterative solves, dense and structured matvecs.

    Each timing is the best of ``repeats``.  Returns a JSON-ready dict with
    one row per mode count and the fitted direct-solve exponent against
    ``n_x * n_y`` (and, for reference, against the system dimension).
    """
    cube = bench_cube(size, seed)
    products = accumulate_products(cube)
    rng = np.random.default_rng(seed)
    rows = []
    for n in modes:
        t_asm, system = _best_of(lambda: assemble_dense(products, n, n), repeats)
        t_direct, (_, rep) = _best_of(lambda: solve_direct(system), repeats)
        t_iter, (_, irep) = _best_of(lambda: solve_iterative(system, tol=tol), repeats)
        x = rng.standard_normal(system.dim) + 1j * rng.standard_normal(system.dim)
        matvec_structured(system, x)  # builds the cached kernels
        inner = 20
        t_dense, _ = _best_of(lambda: [system.matrix @ x for _ in range(inner)], repeats)
        t_struct, _ = _best_of(lambda: [matvec_structured(system, x) for _ in range(inner)], repeats)
        rows.append(dict(n=n, dim=system.dim, assemble=t_asm, direct=t_direct,
                         iterative=t_iter, iterations=irep.iterations,
                         matvec_dense=t_dense / inner, matvec_structured=t_struct / inner,
                         condition=rep.condition))
    times = [r["direct"] for r in rows]
    dims = [r["dim"] for r in rows]
    return dict(size=size, repeats=repeats, rows=rows,
                direct_exponent=scaling_exponent(list(modes), times),
                direct_exponent_vs_dim=float(np.polyfit(np.log(dims), np.log(times), 1)[0]))
