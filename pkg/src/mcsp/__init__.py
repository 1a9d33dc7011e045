"""Multiclass CSP feature extraction with an evolving interval type-2 fuzzy classifier."""
from .covariance import class_average, class_outlier_mask, spatial_covariance
from .csp import SpatialFilterBank, csp_two_class, extract_features, multiclass_csp
from .dataio import Trial, TrialSet, read_trialset, write_trialset
from .errors import NumericalError, StageError, ValidationError
from .jad import ffdiag
from .kernels import BACKEND
from .preprocess import apply_filter, design_bandpass, epoch
from .pso import PSOConfig, tune
from .srit2nfis import SRIT2NFIS, HyperParams
from .synth import SynthSpec, generate, generate_session

__version__ = "0.1.0"

__all__ = [
    "BACKEND",
    "HyperParams",
    "NumericalError",
    "PSOConfig",
    "SRIT2NFIS",
    "SpatialFilterBank",
    "StageError",
    "SynthSpec",
    "Trial",
    "TrialSet",
    "ValidationError",
    "apply_filter",
    "class_average",
    "class_outlier_mask",
    "csp_two_class",
    "design_bandpass",
    "epoch",
    "extract_features",
    "ffdiag",
    "generate",
    "generate_session",
    "multiclass_csp",
    "read_trialset",
    "spatial_covariance",
    "tune",
    "write_trialset",
]
