"""
Smooth 2-D velocity fields from image sequences.

A truncated Fourier series for the velocity is fitted by linear least
squares to the advection constraint ``dI/dt + v . grad I = 0`` summed over
all pixels and frame pairs.  Everything works in pixels and frames.
"""

__version__ = "0.1.0"

from .cube import ImageCube, add_gaussian_noise, apply_gradient, load_cube, mark_missing, save_cube
from .deriv import DerivativeProducts, accumulate_products, spatial_gradient, temporal_derivative
from .errors import (ConvergenceError, CubeFormatError, CubeSizeError, DegenerateDataError,
                     EstimationInputError, SpecflowError)
from .spectral import (SpectralVelocity, evaluate, hexagonal_field, load_velocity, mean_flow,
                       random_field, save_velocity, subtract_mean_flow)
from .assemble import NormalSystem, assemble, assemble_dense, matvec_structured, product_spectra
from .solve import SolveReport, estimate, solve_direct, solve_iterative
from .synth import AdvectionConfig, advect, make_texture
from .metrics import (FlowMetrics, boundary_residual_profile, compare_fields, convergence_study,
                      merit, speed_histogram, zonal_profile)

__all__ = [
    "ImageCube", "add_gaussian_noise", "apply_gradient", "load_cube", "mark_missing", "save_cube",
    "DerivativeProducts", "accumulate_products", "spatial_gradient", "temporal_derivative",
    "ConvergenceError", "CubeFormatError", "CubeSizeError", "DegenerateDataError",
    "EstimationInputError", "SpecflowError",
    "SpectralVelocity", "evaluate", "hexagonal_field", "load_velocity", "mean_flow",
    "random_field", "save_velocity", "subtract_mean_flow",
    "NormalSystem", "assemble", "assemble_dense", "matvec_structured", "product_spectra",
    "SolveReport", "estimate", "solve_direct", "solve_iterative",
    "AdvectionConfig", "advect", "make_texture",
    "FlowMetrics", "boundary_residual_profile", "compare_fields", "convergence_study",
    "merit", "speed_histogram", "zonal_profile",
]
