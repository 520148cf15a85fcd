"""Phase retrieval from masked Fourier intensities with a PCA generative prior."""

from .config import Settings
from .generative import GenerativeModel, train_pca
from .measurement import MeasurementOperator, make_probes
from .optimize import Formulation, FormulationKind, SolverConfig, UnifiedProblem, reconstruct

__all__ = [
    "Formulation",
    "FormulationKind",
    "GenerativeModel",
    "MeasurementOperator",
    "Settings",
    "SolverConfig",
    "UnifiedProblem",
    "make_probes",
    "reconstruct",
    "train_pca",
]
