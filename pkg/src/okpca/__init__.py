"""Occupation-kernel PCA for fault detection on trajectories of dynamical systems.

Trajectories are embedded in a Gaussian RBF reproducing-kernel Hilbert space
through occupation kernels; principal components of the centered Gram matrix
define a normal subspace, and the squared distance to it (the reconstruction
error) flags faulty trajectories.
"""

from okpca.detector import (
    DetectionReport,
    Verdict,
    classify,
    classify_many,
    reconstruction_error,
    reconstruction_errors,
    threshold_from_training,
    training_errors,
)
from okpca.errors import (
    ConfigError,
    DatasetError,
    DimensionError,
    NumericalError,
    OkpcaError,
    RankError,
    SimulationDiverged,
)
from okpca.kernel import KernelFamily, KernelSpec, eval_kernel
from okpca.model import (
    OkpcaModel,
    center_gram,
    fit,
    gram_matrix,
    leading_eigenpairs,
    load_model,
    project,
    save_model,
)
from okpca.trajectory import (
    QuadratureRule,
    Trajectory,
    inner_product_matrix,
    occupation_eval,
    occupation_inner,
)

__version__ = "0.1.0"

__all__ = [
    "ConfigError", "DatasetError", "DetectionReport", "DimensionError", "KernelFamily",
    "KernelSpec", "NumericalError", "OkpcaError", "OkpcaModel", "QuadratureRule", "RankError",
    "SimulationDiverged", "Trajectory", "Verdict", "center_gram", "classify", "classify_many",
    "eval_kernel", "fit", "gram_matrix", "inner_product_matrix", "leading_eigenpairs",
    "load_model", "occupation_eval", "occupation_inner", "project", "reconstruction_error",
    "reconstruction_errors", "save_model", "threshold_from_training", "training_errors",
]
