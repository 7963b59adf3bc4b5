"""Semi-analytic simulation of a regularized spherical electromagnetic cloak.

Submodules
----------
transform
    Blow-up maps, tensor push-forward and the cloak media.
specfun
    Spherical Bessel functions, vector spherical harmonics and modal fields.
sources
    Divergence-free current sources, their free fields and multipole data.
mie
    Layered-sphere transmission solver and field evaluation.
visibility
    Annulus norms of the difference field and rho / omega sweeps.
identities
    Stratton-Chu, multiplier and energy identity checks.
timedomain
    Fourier conventions, pulsed sources and time-domain cloaking error.
cli
    Batch driver.
"""

from .errors import (CloakError, DecayError, DomainError, IllConditionedModeWarning,
                     InterfacePointError, InvalidParameterError, QuadratureError,
                     ResolutionError, SingularMapError, TruncationError, UnsupportedRegionError)
from .mie import (FrequencySolution, RadialLayeredMedium, cloak_field, difference_field,
                  eval_field, scattered_farfield, solve_modes, solve_source)
from .sources import PatchCurrent, ShellCurrent, free_field, modal_expand_incident, plane_wave_coeffs
from .specfun import ModalCoefficients
from .timedomain import GaussianCarrier, PulsedSource, TimeSignal, sobolev_time_norm, time_domain_error
from .visibility import annulus_l2_norm, omega_regime_report, rho_scaling_sweep, visibility

__version__ = "0.1.0"

__all__ = [
    "CloakError", "DecayError", "DomainError", "IllConditionedModeWarning", "InterfacePointError",
    "InvalidParameterError", "QuadratureError", "ResolutionError", "SingularMapError",
    "TruncationError", "UnsupportedRegionError",
    "FrequencySolution", "RadialLayeredMedium", "cloak_field", "difference_field", "eval_field",
    "scattered_farfield", "solve_modes", "solve_source",
    "PatchCurrent", "ShellCurrent", "free_field", "modal_expand_incident", "plane_wave_coeffs",
    "ModalCoefficients",
    "GaussianCarrier", "PulsedSource", "TimeSignal", "sobolev_time_norm", "time_domain_error",
    "annulus_l2_norm", "omega_regime_report", "rho_scaling_sweep", "visibility",
]
