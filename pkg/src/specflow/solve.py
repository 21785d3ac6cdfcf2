"""
Solvers for the spectral normal equations and the one-call estimator.

Both solvers work on the row-flipped system, which is Hermitian positive
semi-definite (it is a weighted Gram matrix of the Fourier basis).  The
direct path uses a Cholesky factorisation with a LAPACK condition
estimate; the iterative path is diagonally preconditioned conjugate
gradients driven only by :func:`~specflow.assemble.matvec_structured`.
"""

from __future__ import annotations

import logging
import time
from dataclasses import dataclass, asdict
from typing import Optional, Tuple

import numpy as np
import scipy.linalg
from scipy.linalg import lapack

from .assemble import (NormalSystem, assemble, flip_rows, matvec_structured)
from .cube import ImageCube
from .deriv import accumulate_products
from .errors import ConvergenceError, DegenerateDataError
from .spectral import SpectralVelocity, symmetrized

log = logging.getLogger(__name__)

MAX_CONDITION = 1e12
SOLVERS = ("direct", "iterative")


@dataclass
class SolveReport:
    method: str
    iterations: int
    residual: float
    wall_time: float
    symmetry_deviation: float = 0.0
    condition: Optional[float] = None

    def to_dict(self):
        return asdict(self)


def _degenerate_cause(system: NormalSystem) -> str:
    s = system.spectra
    gxx = s.at("pxx", 0, 0).real
    gyy = s.at("pyy", 0, 0).real
    floor = 1e-12 * max(gxx + gyy, 0.0)
    if gxx <= 0 and gyy <= 0:
        return "no spatial gradient (textureless frames)"
    if gxx <= floor:
        return "no gradient along x (alpha modes undetermined)"
    if gyy <= floor:
        return "no gradient along y (beta modes undetermined)"
    return "gradient texture does not constrain all retained modes"


def _relative_residual(apply, x, rhs) -> float:
    norm = np.linalg.norm(rhs)
    r = np.linalg.norm(apply(x) - rhs)
    return float(r / norm) if norm > 0 else float(r)


def _finish(system, x, method, iterations, t0, apply, condition=None):
    v = SpectralVelocity.from_vector(x, system.n_x, system.n_y, system.X, system.Y)
    v, deviation = symmetrized(v)
    residual = _relative_residual(apply, v.to_vector(), system.rhs)
    report = SolveReport(method, iterations, residual, time.perf_counter() - t0,
                         deviation, condition)
    log.debug("%s solve: dim=%d residual=%.3e asym=%.3e", method, system.dim, residual, deviation)
    return v, report


def solve_direct(system: NormalSystem, max_condition: float = MAX_CONDITION):
    """Cholesky solve of the Hermitian (row-flipped) dense system.

    Returns
    -------
    (SpectralVelocity, SolveReport)

    Raises
    ------
    DegenerateDataError
        If the matrix is not positive definite or its condition estimate
        exceeds ``max_condition``.
    """
    if system.matrix is None:
        raise ValueError("solve_direct needs a dense system (assemble_dense)")
    t0 = time.perf_counter()
    n_x, n_y = system.n_x, system.n_y
    herm = flip_rows(system.matrix, n_x, n_y)
    b = flip_rows(system.rhs, n_x, n_y)
    anorm = np.abs(herm).sum(axis=0).max()
    if anorm == 0:
        raise DegenerateDataError(f"degenerate data: {_degenerate_cause(system)}",
                                  cause=_degenerate_cause(system))
    try:
        c, lower = scipy.linalg.cho_factor(herm, lower=False, check_finite=False)
    except np.linalg.LinAlgError:
        cause = _degenerate_cause(system)
        raise DegenerateDataError(f"degenerate data: {cause} (matrix not positive definite)",
                                  cause=cause) from None
    rcond, info = lapack.zpocon(c, anorm, uplo="U")
    condition = 1.0 / rcond if rcond > 0 else np.inf
    if info != 0 or condition > max_condition:
        cause = _degenerate_cause(system)
        raise DegenerateDataError(
            f"degenerate data: {cause} (condition estimate {condition:.3g} > {max_condition:.3g})",
            cause=cause, condition=condition)
    x = scipy.linalg.cho_solve((c, lower), b, check_finite=False)
    return _finish(system, x, "direct", 0, t0, lambda y: system.matrix @ y, condition)


def solve_iterative(system: NormalSystem, tol: float = 1e-8, max_iter: Optional[int] = None,
                    x0=None):
    """Preconditioned conjugate gradients on the implicit Hermitian operator.

    Only the structured matvec and the (constant-per-block) diagonal are
    used; the dense matrix is never formed.

    Raises
    ------
    ConvergenceError
        If the relative residual is still above ``tol`` after ``max_iter``
        iterations.  The exception carries the best iterate.
    DegenerateDataError
        If the operator has an empty diagonal (no texture at all).
    """
    t0 = time.perf_counter()
    n_x, n_y = system.n_x, system.n_y
    if max_iter is None:
        max_iter = max(10 * system.dim, 100)
    apply = lambda y: matvec_structured(system, y)
    herm = lambda y: flip_rows(apply(y), n_x, n_y)
    b = flip_rows(system.rhs, n_x, n_y)
    bnorm = np.linalg.norm(b)
    diag = system.diagonal()
    if np.all(diag <= 0):
        cause = _degenerate_cause(system)
        raise DegenerateDataError(f"degenerate data: {cause}", cause=cause)
    inv_diag = np.where(diag > 0, 1.0 / np.where(diag > 0, diag, 1.0), 0.0)

    x = np.zeros(system.dim, complex) if x0 is None else np.array(x0, dtype=complex)
    if bnorm == 0:
        return _finish(system, np.zeros(system.dim, complex), "iterative", 0, t0, apply)
    r = b - herm(x)
    z = inv_diag * r
    p = z.copy()
    rz = np.vdot(r, z)
    best_x, best_res = x.copy(), np.linalg.norm(r) / bnorm
    it = 0
    while best_res > tol and it < max_iter:
        q = herm(p)
        pq = np.vdot(p, q)
        if pq.real <= 0:
            cause = _degenerate_cause(system)
            raise DegenerateDataError(f"degenerate data: {cause} (operator not positive definite)",
                                      cause=cause)
        step = rz / pq
        x = x + step * p
        r = r - step * q
        it += 1
        res = np.linalg.norm(r) / bnorm
        if res < best_res:
            best_x, best_res = x.copy(), res
        z = inv_diag * r
        rz_new = np.vdot(r, z)
        p = z + (rz_new / rz) * p
        rz = rz_new
    if best_res > tol:
        raise ConvergenceError(
            f"conjugate gradients stopped at residual {best_res:.3e} > tol {tol:.1e} "
            f"after {it} iterations", best=best_x, residual=float(best_res), iterations=it)
    return _finish(system, best_x, "iterative", it, t0, apply)


def solve(system: NormalSystem, solver: str = "direct", tol: float = 1e-8,
          max_iter: Optional[int] = None):
    if solver == "direct":
        return solve_direct(system)
    if solver == "iterative":
        return solve_iterative(system, tol=tol, max_iter=max_iter)
    raise ValueError(f"solver must be one of {SOLVERS}, got {solver!r}")


def estimate(cube: ImageCube, n_x: int, n_y: Optional[int] = None, solver: str = "direct",
             tol: float = 1e-8, max_iter: Optional[int] = None,
             missing: str = "skip") -> Tuple[SpectralVelocity, SolveReport]:
    """Fit a velocity field with ``n_x`` x ``n_y`` Fourier modes to ``cube``.

    Parameters
    ----------
    cube : ImageCube
    n_x, n_y : int
        Retained modes per axis (``n_y`` defaults to ``n_x``).
    solver : {"direct", "iterative"}
    tol, max_iter
        Iterative solver controls.
    missing : {"skip", "include"}
        Whether pairs touching invalid frames are dropped or used as-is.

    Returns
    -------
    velocity : SpectralVelocity
        Amplitudes in pixels/frame.
    report : SolveReport
    """
    if n_y is None:
        n_y = n_x
    if solver not in SOLVERS:
        raise ValueError(f"solver must be one of {SOLVERS}, got {solver!r}")
    products = accumulate_products(cube, missing=missing)
    system = assemble(products, n_x, n_y, dense=(solver == "direct"))
    return solve(system, solver, tol=tol, max_iter=max_iter)
