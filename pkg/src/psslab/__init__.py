"""Spectral solver and pseudospherical-surface geometry for a Novikov-type equation."""

__version__ = "0.1.0"

from .spectral import Field, PeriodicGrid, SpectralCoeffs, differentiate, green_convolve, helmholtz_solve, sobolev_norm
from .solver import SolutionFrame, Trajectory, evolve, make_frame, nonlocal_rhs, pde_residual
from .geometry import PssParams, geometry_report, gaussian_curvature, one_form_coeffs
from .connection import ConnectionParams, closed_form_abc, codazzi_gauss_residuals, integrate_connection
from .config import RunConfig, parse_config, serialize_config

__all__ = [
    "__version__",
    "Field",
    "PeriodicGrid",
    "SpectralCoeffs",
    "differentiate",
    "green_convolve",
    "helmholtz_solve",
    "sobolev_norm",
    "SolutionFrame",
    "Trajectory",
    "evolve",
    "make_frame",
    "nonlocal_rhs",
    "pde_residual",
    "PssParams",
    "geometry_report",
    "gaussian_curvature",
    "one_form_coeffs",
    "ConnectionParams",
    "closed_form_abc",
    "codazzi_gauss_residuals",
    "integrate_connection",
    "RunConfig",
    "parse_config",
    "serialize_config",
]
