"""
Normal equations of the spectral least-squares fit.

Substituting the Fourier velocity into the summed squared advection
residual and setting the derivative with respect to every amplitude to
zero gives, for each retained mode ``(k, l)``::

    sum_ij alpha_ij Pxx(k+i, l+j) + beta_ij Pxy(k+i, l+j) = -Ptx(k, l)
    sum_ij alpha_ij Pxy(k+i, l+j) + beta_ij Pyy(k+i, l+j) = -Pty(k, l)

where ``P..(m, n)`` is the 2-D DFT (``exp(-2 pi 1j (...))`` convention) of
the corresponding accumulated derivative product.  Matrix entries depend
only on index *sums*, so after flipping the row index (``k -> -k``) each
block is Toeplitz-block-Toeplitz and Hermitian.  That is what the
structured matvec and the solvers exploit.

Unknown ordering: ``[alpha.ravel(), beta.ravel()]`` with arrays indexed
``[j + n_y, i + n_x]``.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional

import numpy as np
import scipy.fft

from .deriv import DerivativeProducts


@dataclass(frozen=True, eq=False)
class ProductSpectra:
    """DFT tables of the five product fields on ``[-2n_y..2n_y] x [-2n_x..2n_x]``.

    Tables are indexed ``[n + 2 n_y, m + 2 n_x]``.
    """

    n_x: int
    n_y: int
    pxx: np.ndarray
    pxy: np.ndarray
    pyy: np.ndarray
    ptx: np.ndarray
    pty: np.ndarray

    def at(self, name, m, n):
        return getattr(self, name)[n + 2 * self.n_y, m + 2 * self.n_x]


@dataclass(eq=False)
class NormalSystem:
    """Complex linear system for the spectral amplitudes.

    ``matrix`` is filled only by :func:`assemble_dense`; the implicit form
    (``spectra`` alone) is enough for :func:`matvec_structured`.
    """

    n_x: int
    n_y: int
    X: int
    Y: int
    spectra: ProductSpectra
    rhs: np.ndarray
    matrix: Optional[np.ndarray] = None
    pair_count: int = 0
    _kernels: Optional[tuple] = field(default=None, repr=False)

    @property
    def n_modes(self) -> int:
        return (2 * self.n_x + 1) * (2 * self.n_y + 1)

    @property
    def dim(self) -> int:
        return 2 * self.n_modes

    @property
    def is_dense(self) -> bool:
        return self.matrix is not None

    def diagonal(self) -> np.ndarray:
        """Diagonal of the row-flipped (Hermitian) form: Pxx(0,0) and Pyy(0,0)."""
        s = self.spectra
        m = self.n_modes
        return np.concatenate([np.full(m, s.at("pxx", 0, 0).real),
                               np.full(m, s.at("pyy", 0, 0).real)])


def check_resolution(n_x: int, n_y: int, height: int, width: int) -> None:
    if n_x < 0 or n_y < 0:
        raise ValueError("mode counts must be non-negative")
    if not (4 * n_x < width and 4 * n_y < height):
        raise ValueError(f"modes ({n_x}, {n_y}) need 4*n_x < W and 4*n_y < H; "
                         f"frame is {height}x{width}")


def _extract(full, n_x, n_y, reach):
    h, w = full.shape
    jj = np.arange(-reach * n_y, reach * n_y + 1) % h
    ii = np.arange(-reach * n_x, reach * n_x + 1) % w
    return full[np.ix_(jj, ii)]


def product_spectra(products: DerivativeProducts, n_x: int, n_y: int) -> ProductSpectra:
    """DFT each product field and keep bins ``|m| <= 2 n_x``, ``|n| <= 2 n_y``."""
    h, w = products.shape
    check_resolution(n_x, n_y, h, w)
    fields = np.stack([products.sxx, products.sxy, products.syy, products.stx, products.sty])
    full = scipy.fft.fft2(fields, axes=(-2, -1))
    tables = [_extract(f, n_x, n_y, 2) for f in full]
    return ProductSpectra(n_x, n_y, *tables)


def _rhs(spectra: ProductSpectra) -> np.ndarray:
    n_x, n_y = spectra.n_x, spectra.n_y
    inner = (slice(n_y, 3 * n_y + 1), slice(n_x, 3 * n_x + 1))
    return -np.concatenate([spectra.ptx[inner].ravel(), spectra.pty[inner].ravel()])


def assemble_implicit(products: DerivativeProducts, n_x: int, n_y: int) -> NormalSystem:
    """System in implicit form (spectra + rhs, no dense matrix)."""
    spectra = product_spectra(products, n_x, n_y)
    h, w = products.shape
    return NormalSystem(n_x, n_y, w, h, spectra, _rhs(spectra), pair_count=products.pair_count)


def _sum_index_block(table, n_x, n_y):
    # block[(l,k), (j,i)] = table(k+i, l+j)
    ky, kx = np.divmod(np.arange((2 * n_y + 1) * (2 * n_x + 1)), 2 * n_x + 1)
    rows_y = ky[:, None] + ky[None, :]
    rows_x = kx[:, None] + kx[None, :]
    return table[rows_y, rows_x]


def dense_matrix(spectra: ProductSpectra) -> np.ndarray:
    n_x, n_y = spectra.n_x, spectra.n_y
    bxx = _sum_index_block(spectra.pxx, n_x, n_y)
    bxy = _sum_index_block(spectra.pxy, n_x, n_y)
    byy = _sum_index_block(spectra.pyy, n_x, n_y)
    return np.block([[bxx, bxy], [bxy, byy]])


def assemble_dense(products: DerivativeProducts, n_x: int, n_y: int) -> NormalSystem:
    """System with the coefficient matrix materialised."""
    system = assemble_implicit(products, n_x, n_y)
    system.matrix = dense_matrix(system.spectra)
    return system


def assemble(products: DerivativeProducts, n_x: int, n_y: int, dense: bool = True) -> NormalSystem:
    if dense:
        return assemble_dense(products, n_x, n_y)
    return assemble_implicit(products, n_x, n_y)


# ---------------------------------------------------------------------------
# structured matrix-vector product


def _kernels(system: NormalSystem):
    if system._kernels is None:
        n_x, n_y = system.n_x, system.n_y
        shape = (scipy.fft.next_fast_len(6 * n_y + 1), scipy.fft.next_fast_len(6 * n_x + 1))
        s = system.spectra
        k = scipy.fft.fft2(np.stack([s.pxx, s.pxy, s.pyy]), s=shape, axes=(-2, -1))
        system._kernels = (shape, k)
    return system._kernels


def matvec_structured(system: NormalSystem, vector) -> np.ndarray:
    """Coefficient matrix times ``vector`` without forming the matrix.

    Each block maps ``a`` to ``(k, l) -> sum_ij P(k+i, l+j) a(i, j)``, a
    correlation that becomes a zero-padded linear convolution once ``a``
    is reversed.  Cost is a handful of FFTs of size ``(6 n_y + 1) x
    (6 n_x + 1)``.
    """
    n_x, n_y = system.n_x, system.n_y
    vector = np.asarray(vector, dtype=np.complex128)
    m = system.n_modes
    grid = (2 * n_y + 1, 2 * n_x + 1)
    shape, (kxx, kxy, kyy) = _kernels(system)
    a = scipy.fft.fft2(vector[:m].reshape(grid)[::-1, ::-1], s=shape)
    b = scipy.fft.fft2(vector[m:].reshape(grid)[::-1, ::-1], s=shape)
    out = scipy.fft.ifft2(np.stack([kxx * a + kxy * b, kxy * a + kyy * b]), axes=(-2, -1))
    # table offset 2n plus reversed-vector offset n: k = -n lands at 2n
    keep = out[:, 2 * n_y:4 * n_y + 1, 2 * n_x:4 * n_x + 1]
    return keep.reshape(2 * m)


def matvec_dense(system: NormalSystem, vector) -> np.ndarray:
    if system.matrix is None:
        raise ValueError("system has no dense matrix")
    return system.matrix @ np.asarray(vector)


def flip_rows(vector, n_x: int, n_y: int) -> np.ndarray:
    """Map row index ``(k, l) -> (-k, -l)`` within each component block.

    Applied to the coefficient matrix this yields the Hermitian form.
    """
    vector = np.asarray(vector)
    grid = (2 * n_y + 1, 2 * n_x + 1)
    m = grid[0] * grid[1]
    lead = vector.shape[1:]
    a = vector[:m].reshape(grid + lead)[::-1, ::-1]
    b = vector[m:].reshape(grid + lead)[::-1, ::-1]
    return np.concatenate([a.reshape((m,) + lead), b.reshape((m,) + lead)])
