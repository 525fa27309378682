"""Inverse kernel decomposition: closed-form nonlinear dimensionality reduction.

Latent coordinates are recovered from high-dimensional observations in three
steps: estimate the covariance, invert the assumed stationary kernel
element-wise to get squared latent distances, then factor the distance
information through a single symmetric eigendecomposition.  Two
robustification strategies (geodesic covariance completion and blockwise
solve-and-merge) handle data whose weak covariance entries would otherwise
poison the inversion.
"""

from .core import GramLift, LatentEstimate, decompose_covariance, gram_lift, ikd, \
    scaled_distances, select_reference, top_m_psd_factor
from .covariance import CovarianceEstimate, ThresholdedGraph, clamp_covariance, \
    geodesic_completion, sample_covariance, threshold_graph
from .errors import DataError, DisconnectedGraphError, IKDError, MergeError, NumericalError
from .evaluate import AlignmentReport, affine_align, knn_cv, pca_baseline
from .kernels import KernelSpec, kernel_forward, kernel_inverse, matern_inverse_solve
from .robustify import CliqueCover, RigidTransform, blockwise_from_covariance, \
    blockwise_ikd, maximal_clique_cover, rigid_align
from .synthgen import SyntheticDataset, bump_map, gen_latent, generate_dataset, \
    gp_map, sample_mvn, sinusoid_map

__version__ = "0.1.0"

__all__ = [
    "AlignmentReport",
    "CliqueCover",
    "CovarianceEstimate",
    "DataError",
    "DisconnectedGraphError",
    "GramLift",
    "IKDError",
    "KernelSpec",
    "LatentEstimate",
    "MergeError",
    "NumericalError",
    "RigidTransform",
    "SyntheticDataset",
    "ThresholdedGraph",
    "affine_align",
    "blockwise_from_covariance",
    "blockwise_ikd",
    "bump_map",
    "clamp_covariance",
    "decompose_covariance",
    "gen_latent",
    "generate_dataset",
    "geodesic_completion",
    "gp_map",
    "gram_lift",
    "ikd",
    "kernel_forward",
    "kernel_inverse",
    "knn_cv",
    "matern_inverse_solve",
    "maximal_clique_cover",
    "pca_baseline",
    "rigid_align",
    "sample_covariance",
    "sample_mvn",
    "scaled_distances",
    "select_reference",
    "sinusoid_map",
    "threshold_graph",
    "top_m_psd_factor",
]
