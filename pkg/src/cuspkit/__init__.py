"""cuspkit: cusped singularities and mixed-mode oscillations in symmetric
two-cell inhibitory slow-fast systems.

Pipeline: locate a symmetric fold on the critical manifold, verify it is a
non-degenerate cusp, reduce to the three-dimensional center-manifold system,
check the six mechanism conditions, predict the small-oscillation count from
the desingularized eigenvalues, and confirm by simulating the full system
and classifying the resulting mixed-mode oscillation signature.
"""

__version__ = "0.1.0"

from .autodiff import Dual
from .core import (FJet3, GJet2, ModelDefinition, PairState, StateBox,
                   eval_field, exchange, f_jet, f_jet_fd, g_jet, g_jet_fd,
                   y_flip)
from .dynamics import (Trajectory, default_mmo_ic, discard_transient,
                       hermite_resample, integrate, integrate_field)
from .errors import (AnalysisError, ConfigError, CuspkitError,
                     DerivativeConsistencyError, DomainError, FitError,
                     HopfNotFoundError, InconsistencyError, IntegrationError,
                     RootFindError, SolvabilityError, WrongBranchError)
from .manifold import (CuspReport, FoldCurve, ToleranceConfig,
                       cusp_exponent_fit, cusp_test, df_at,
                       find_symmetric_fold, solve_Y, trace_fold_curve)
from .models import (CurtuParams, MorrisLecarParams, build_curtu,
                     build_model, build_morris_lecar, ml_analytic_jet)
from .reduction import (ConditionReport, ReducedCoefficients, SaoPrediction,
                        check_conditions, classify_opening,
                        desingularized_eigenvalues, embed_reduced_state,
                        prediction_from_eigenvalues, project_full_state,
                        q_surface, reduced_field, reduction_coefficients,
                        sao_count)
from .signature import MmoEvent, MmoSignature, classify_mmo, extract_extrema
from .spectra import (HopfResult, JacobianBlocks, find_symmetric_equilibrium,
                      full_jacobian_fd, jacobian_blocks, locate_singular_hopf)

__all__ = [
    "__version__",
    "Dual",
    "PairState", "StateBox", "ModelDefinition", "FJet3", "GJet2",
    "eval_field", "f_jet", "g_jet", "f_jet_fd", "g_jet_fd", "exchange",
    "y_flip",
    "Trajectory", "integrate", "integrate_field", "hermite_resample",
    "default_mmo_ic", "discard_transient",
    "CuspReport", "FoldCurve", "ToleranceConfig", "solve_Y", "df_at",
    "find_symmetric_fold", "cusp_test", "trace_fold_curve",
    "cusp_exponent_fit",
    "ReducedCoefficients", "ConditionReport", "SaoPrediction",
    "reduction_coefficients", "reduced_field", "q_surface",
    "classify_opening", "check_conditions", "desingularized_eigenvalues",
    "sao_count", "prediction_from_eigenvalues", "embed_reduced_state",
    "project_full_state",
    "JacobianBlocks", "HopfResult", "find_symmetric_equilibrium",
    "jacobian_blocks", "locate_singular_hopf", "full_jacobian_fd",
    "MmoEvent", "MmoSignature", "extract_extrema", "classify_mmo",
    "CurtuParams", "MorrisLecarParams", "build_curtu", "build_morris_lecar",
    "build_model", "ml_analytic_jet",
    "CuspkitError", "DomainError", "DerivativeConsistencyError",
    "SolvabilityError", "RootFindError", "HopfNotFoundError",
    "WrongBranchError", "IntegrationError", "AnalysisError", "FitError",
    "InconsistencyError", "ConfigError",
]
