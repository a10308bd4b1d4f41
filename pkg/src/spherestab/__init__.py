"""Numerical toolkit for the conformally invariant log-Sobolev and
Moser-Onofri deficits on the sphere S^n and their stability constants."""

from spherestab.harmonics import (
    GridFunction,
    SpectralFunction,
    SphereGrid,
    analysis,
    dim_harmonic,
    sphere_area,
    synthesis,
)
from spherestab.functionals import (
    d0_distance_to_M,
    d0_metric,
    l2_distance_to_M,
    ls_deficit,
    mo_deficit,
    sharp_constant,
)

__version__ = "0.1.0"

__all__ = [
    "GridFunction",
    "SpectralFunction",
    "SphereGrid",
    "analysis",
    "dim_harmonic",
    "sphere_area",
    "synthesis",
    "d0_distance_to_M",
    "d0_metric",
    "l2_distance_to_M",
    "ls_deficit",
    "mo_deficit",
    "sharp_constant",
]
