"""Sparse adaptive polynomial chaos expansions with stability-gated sequential designs."""
from .adaptive import AdaptiveConfig, Checkpoint, PceModel, build, evaluate, fit_fixed, grow_basis_once
from .basis import InputModel, UniformVariable, basis_matrix, eval_multivariate, eval_univariate
from .benchmarks import get_benchmark, waveguide_qoi
from .kernels import BACKEND
from .lsq import StabilityReport, solve_ls, stability
from .multi_index import MultiIndexSet, admissible_neighbors, generate_set, is_downward_closed
from .persistence import load_model, save_model
from .postproc import moments, rms_cv_error, study_statistics

__version__ = "0.1.0"

__all__ = [
    "AdaptiveConfig", "Checkpoint", "PceModel", "build", "evaluate", "fit_fixed", "grow_basis_once",
    "InputModel", "UniformVariable", "basis_matrix", "eval_multivariate", "eval_univariate",
    "get_benchmark", "waveguide_qoi", "BACKEND", "StabilityReport", "solve_ls", "stability",
    "MultiIndexSet", "admissible_neighbors", "generate_set", "is_downward_closed",
    "load_model", "save_model", "moments", "rms_cv_error", "study_statistics",
]
