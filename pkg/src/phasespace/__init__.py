"""Phase-space sampling and stochastic field simulation.

Samplers for Gaussian and Fock states in the positive-P, Wigner and Q
representations, a P-to-Wigner/Q convolution transform, an interaction-picture
midpoint integrator for Stratonovich SPDEs with absorbing boundaries, and an
exact Gaussian-diffraction oracle.
"""

__version__ = "0.1.0"

from .apodisation import Apodiser, build_absorber, build_projector  # noqa: E402
from .diffraction import GaussianBeam, exact_field, series_evolve  # noqa: E402
from .ensemble import (  # noqa: E402
    POSITIVE_P,
    Q_FUNCTION,
    WIGNER,
    Ordering,
    PhaseSample,
    WeightedEnsemble,
    moment_estimate_number,
    ordering_for,
    weighted_mean,
)
from .fock import FockSpec, sample_fock_complexP, sample_fock_Q  # noqa: E402
from .gaussian import CovarianceSpec, factor_covariance, sample_gaussian  # noqa: E402
from .lattice import Lattice, make_lattice  # noqa: E402
from .ordering import convolve_ensemble, convolve_sample  # noqa: E402
from .spde import FieldState, IntegratorConfig, ModelSpec, run  # noqa: E402

__all__ = [
    "__version__",
    "Apodiser",
    "build_absorber",
    "build_projector",
    "GaussianBeam",
    "exact_field",
    "series_evolve",
    "POSITIVE_P",
    "WIGNER",
    "Q_FUNCTION",
    "Ordering",
    "PhaseSample",
    "WeightedEnsemble",
    "moment_estimate_number",
    "ordering_for",
    "weighted_mean",
    "FockSpec",
    "sample_fock_complexP",
    "sample_fock_Q",
    "CovarianceSpec",
    "factor_covariance",
    "sample_gaussian",
    "Lattice",
    "make_lattice",
    "convolve_ensemble",
    "convolve_sample",
    "FieldState",
    "IntegratorConfig",
    "ModelSpec",
    "run",
]
