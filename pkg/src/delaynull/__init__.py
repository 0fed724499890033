"""Minimal-norm null controls for a linear equation with distributed delay.

Spectral construction (zeros of the characteristic function, biorthogonal
expansion, regularized summation) with a direct simulator and a discretised
least-norm oracle for validation.
"""

from .control import (BiorthControl, ControlSignal, Horizon, eval_v_lambda, solve_p_lambda,
                      synthesize_control, u_for_eigenvector)
from .exceptions import (ConfigError, ControlValidationError, DegenerateError, NumericalError,
                         RootFindingError, SpectrumTooShortError)
from .oracle import least_norm_control, norm_gap_report
from .simulate import Trajectory, semigroup_apply, simulate, terminal_segment_norm
from .spectral import (DelayKernel, EigenRecord, SpectrumSet, biorth_tail, biorth_tail_model,
                       biorth_tail_transform, eval_charfn, eval_charfn_derivative, find_roots)
from .state import MState, expansion_coefficient, expansion_coefficients, m_inner, m_norm
from .summation import (SummationSchedule, WeightTable, partial_sum, reconstruction_error,
                        weight_fn, weight_for_eigenvalue, weight_table)

__all__ = [
    "BiorthControl", "ControlSignal", "Horizon", "eval_v_lambda", "solve_p_lambda",
    "synthesize_control", "u_for_eigenvector",
    "ConfigError", "ControlValidationError", "DegenerateError", "NumericalError",
    "RootFindingError", "SpectrumTooShortError",
    "least_norm_control", "norm_gap_report",
    "Trajectory", "semigroup_apply", "simulate", "terminal_segment_norm",
    "DelayKernel", "EigenRecord", "SpectrumSet", "biorth_tail", "biorth_tail_model",
    "biorth_tail_transform", "eval_charfn", "eval_charfn_derivative", "find_roots",
    "MState", "expansion_coefficient", "expansion_coefficients", "m_inner", "m_norm",
    "SummationSchedule", "WeightTable", "partial_sum", "reconstruction_error", "weight_fn",
    "weight_for_eigenvalue", "weight_table",
]
