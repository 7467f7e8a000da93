"""Exact inversion, spectra and Markov solvers for band + first-column matrices."""

import os as _os

# single-threaded BLAS by default: benchmark timings stay comparable.
# Harmless if numpy is already loaded.
for _var in ("OPENBLAS_NUM_THREADS", "OMP_NUM_THREADS", "MKL_NUM_THREADS",
             "NUMEXPR_NUM_THREADS"):
    _os.environ.setdefault(_var, "1")
del _os, _var

from . import errors
from .applications import (
    StationaryResult,
    ValueResult,
    absorbing_bd_invert,
    absorbing_bd_spec,
    absorbing_c11,
    generator_from_dense,
    steady_state,
    value_function,
)
from .bench import BenchReport, bench, render_table, report_to_dict
from .general import (
    GammaTable,
    InverseView,
    SolveReport,
    block_residual,
    element,
    first_column_value,
    gamma1,
    gamma_table,
    invert,
    rho_eta,
)
from .homogeneous import (
    DiagonalCache,
    HomConstants,
    diagonal_alternative,
    diagonal_identity_gap,
    diagonal_limit,
    hom_block,
    hom_constants,
    hom_element,
    hom_finite_invert,
    hom_invert,
)
from .model import (
    BandSpec,
    HomogeneousSpec,
    StructuredMatrix,
    decompose,
    from_dict,
    generator_from_dict,
    validate,
)
from .oracles import dense_eigen, dense_invert, sherman_morrison_invert
from .spectral import (
    EigState,
    SpectralAudit,
    Spectrum,
    decompose_perturbation,
    eig_vectors,
    eigenvalues_of_B,
    initial_state,
    multiset_gap,
    rank_one_update,
    solve_alpha,
    tridiag_eigen,
    tridiag_part,
)

__version__ = "0.1.0"

__all__ = [
    "BandSpec", "BenchReport", "DiagonalCache", "EigState", "GammaTable",
    "HomConstants", "HomogeneousSpec", "InverseView", "SolveReport",
    "SpectralAudit", "Spectrum", "StationaryResult", "StructuredMatrix",
    "ValueResult", "absorbing_bd_invert", "absorbing_bd_spec", "absorbing_c11",
    "bench", "block_residual", "decompose", "decompose_perturbation",
    "dense_eigen", "dense_invert", "diagonal_alternative",
    "diagonal_identity_gap", "diagonal_limit", "eig_vectors",
    "eigenvalues_of_B", "element", "errors", "first_column_value",
    "from_dict", "gamma1", "gamma_table", "generator_from_dense",
    "generator_from_dict", "hom_block", "hom_constants", "hom_element",
    "hom_finite_invert", "hom_invert", "initial_state", "invert",
    "multiset_gap", "rank_one_update", "render_table", "report_to_dict",
    "rho_eta", "sherman_morrison_invert", "solve_alpha", "steady_state",
    "tridiag_eigen", "tridiag_part", "validate", "value_function",
]
