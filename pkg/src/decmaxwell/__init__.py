"""Discrete exterior calculus for Maxwell Cauchy data on compact surfaces.

Submodules: complex (meshes), cochain (forms and d/delta), hodge (Laplacians,
spectral calculus, decomposition), maxwell (constraints and gauge fixing),
evolution (spectral wave propagation, Green operators, energies), hadamard
(frequency projectors and state verification), cli (batch pipeline).
"""
from .complex import SimplicialComplex, make_circle, make_icosphere, make_torus_lattice, validate
from .cochain import Cochain, d, delta, inner_l2, inner_sobolev, mollify
from .hodge import (
    SpectralCache,
    assemble_laplacian,
    build_caches,
    coulomb_projector,
    hodge_decompose,
    solve_poisson,
    spectral_fn,
)
from .maxwell import (
    GaugeData,
    MaxwellData,
    check_constraints,
    gauge_fix,
    k_sigma,
    k_sigma_dagger,
    q1_sigma,
    t_sigma,
)
from .evolution import TimeSeries, causal_propagator, energy, evolve, evolve_maxwell, green, maxwell_residual
from .hadamard import build_c_pm, build_pi_pm, build_sqrt, build_suite, two_point_function, verify_state

__all__ = [
    "SimplicialComplex",
    "make_circle",
    "make_icosphere",
    "make_torus_lattice",
    "validate",
    "Cochain",
    "d",
    "delta",
    "inner_l2",
    "inner_sobolev",
    "mollify",
    "SpectralCache",
    "assemble_laplacian",
    "build_caches",
    "coulomb_projector",
    "hodge_decompose",
    "solve_poisson",
    "spectral_fn",
    "GaugeData",
    "MaxwellData",
    "check_constraints",
    "gauge_fix",
    "k_sigma",
    "k_sigma_dagger",
    "q1_sigma",
    "t_sigma",
    "TimeSeries",
    "causal_propagator",
    "energy",
    "evolve",
    "evolve_maxwell",
    "green",
    "maxwell_residual",
    "build_c_pm",
    "build_pi_pm",
    "build_sqrt",
    "build_suite",
    "two_point_function",
    "verify_state",
]

__version__ = "0.1.0"
