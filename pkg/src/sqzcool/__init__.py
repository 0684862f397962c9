"""Optomechanical sideband cooling with intracavity or injected squeezed light."""
__version__ = "0.1.0"

from ._kernels import USING_NUMBA
from .core_model import (
    FullModelParams,
    InjectedModelParams,
    LinearizedParams,
    LinearSystem,
    StabilityReport,
    build_injected_system,
    build_internal_system,
    renormalize_for_pump,
    stability,
)
from .errors import (
    ConfigError,
    Degenerate,
    IllConditioned,
    NoStablePoint,
    NotConverged,
    NotEquivalentRegime,
    SqzCoolError,
    Unstable,
)
from .figures import reproduce_figure
from .frame import equivalence_certificate, map_injected_to_internal, map_internal_to_injected
from .lyapunov import numeric_spectrum, phonon_number, steady_covariance
from .mean_field import invert_targets, linearize, solve_mean_field
from .optimal import equal_coupling_detunings, injected_optimum, internal_optimum, rates_at_optimum
from .spectra import (
    CoolingResult,
    cooling_perturbative,
    nu_zeta,
    spectrum_cross,
    spectrum_injected,
    spectrum_internal,
    spectrum_pump,
)
from .sweep import Axis, Method, Model, SweepRecord, SweepSpec, evaluate_point, optimize_nst, run_sweep

__all__ = [
    "USING_NUMBA",
    "FullModelParams",
    "InjectedModelParams",
    "LinearizedParams",
    "LinearSystem",
    "StabilityReport",
    "build_injected_system",
    "build_internal_system",
    "renormalize_for_pump",
    "stability",
    "ConfigError",
    "Degenerate",
    "IllConditioned",
    "NoStablePoint",
    "NotConverged",
    "NotEquivalentRegime",
    "SqzCoolError",
    "Unstable",
    "reproduce_figure",
    "equivalence_certificate",
    "map_injected_to_internal",
    "map_internal_to_injected",
    "numeric_spectrum",
    "phonon_number",
    "steady_covariance",
    "invert_targets",
    "linearize",
    "solve_mean_field",
    "equal_coupling_detunings",
    "injected_optimum",
    "internal_optimum",
    "rates_at_optimum",
    "CoolingResult",
    "cooling_perturbative",
    "nu_zeta",
    "spectrum_cross",
    "spectrum_injected",
    "spectrum_internal",
    "spectrum_pump",
    "Axis",
    "Method",
    "Model",
    "SweepRecord",
    "SweepSpec",
    "evaluate_point",
    "optimize_nst",
    "run_sweep",
    "__version__",
]
