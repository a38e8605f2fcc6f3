"""Numerical verification toolkit for scalar-flat graphs and the Penrose inequality."""

from .geometry import (
    Ellipticity,
    Jet,
    ShapeData,
    TangentialField,
    elementary_symmetric,
    ellipticity_classify,
    jacobi_coefficients,
    shape_data,
    tangential_field,
)
from .graphs import DomainError, FlatGraph, HemisphereGraph, ScaledGraph
from .mass import HorizonShape, adm_flux_at_radius, adm_mass, mass_formula_terms, penrose_check
from .schwarzschild import (
    SchwarzschildGraph,
    SchwarzschildProfile,
    graph_jet,
    horizon_radius,
    profile_jet,
    solve_radial_scalar_flat,
)

__version__ = "0.1.0"
