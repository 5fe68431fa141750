"""Multi-domain dictionary classification.

Builds a dictionary of class atoms observed under several style domains,
collapses it per query through a block-diagonal softmax weighting, solves
the resulting Lasso/Elastic-Net with ADMM, and classifies by the largest
code component, inferring the query's style domain along the way.
"""

from .backend import ACTIVE_BACKEND, NUMBA_AVAILABLE, USE_NUMBA
from .bench import (BenchConfig, BenchReport, ExperimentSpec,
                    default_experiment_spec, gen_synthetic, run_experiment,
                    scaling_sweep)
from .classify import ClassificationResult, classify, top_k_recall
from .dictionary import (Dictionary, DictionaryFormatError,
                         assemble_miscellaneous, extract_domain, load_csv,
                         load_dictionary, normalize_atoms, save_dictionary)
from .domains import KINDS, DomainTransform, apply_transform, build_transform_suite
from .oracle import OracleConfig, kkt_residual, lasso_cd, prox_gradient_lasso
from .solver import (FactorCache, SolveResult, SolverConfig, lasso_objective,
                     soft_shrink, solve_admm, solve_query)
from .weighting import (CorrelationProfile, WeightingMatrix, build_weighting,
                        correlations, softmax_block, weighted_dictionary)

__version__ = "0.1.0"

__all__ = [
    "ACTIVE_BACKEND", "NUMBA_AVAILABLE", "USE_NUMBA",
    "BenchConfig", "BenchReport", "ExperimentSpec", "default_experiment_spec",
    "gen_synthetic", "run_experiment", "scaling_sweep",
    "ClassificationResult", "classify", "top_k_recall",
    "Dictionary", "DictionaryFormatError", "assemble_miscellaneous",
    "extract_domain", "load_csv", "load_dictionary", "normalize_atoms",
    "save_dictionary",
    "KINDS", "DomainTransform", "apply_transform", "build_transform_suite",
    "OracleConfig", "kkt_residual", "lasso_cd", "prox_gradient_lasso",
    "FactorCache", "SolveResult", "SolverConfig", "lasso_objective",
    "soft_shrink", "solve_admm", "solve_query",
    "CorrelationProfile", "WeightingMatrix", "build_weighting",
    "correlations", "softmax_block", "weighted_dictionary",
    "__version__",
]
