"""Latent recovery pipeline: distances -> reference -> Gram lift -> eigenpairs.

Given a covariance matrix whose entries all lie in the invertible range of a
stationary kernel, the latent coordinates (up to an affine map) fall out of a
single symmetric eigendecomposition:

1. invert the kernel element-wise to recover scaled squared distances,
2. pick the reference point whose worst distance estimate is smallest,
3. lift distances to an inner-product (Gram) matrix anchored at the reference,
4. factor the Gram matrix through its top positive eigenpairs.
"""

from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np

from .covariance import (
    CovarianceEstimate,
    clamp_covariance,
    geodesic_completion,
    sample_covariance,
)
from .errors import DataError, NumericalError
from .kernels import KernelSpec, kernel_inverse

EIGENVALUE_TIE_RTOL = 1e-12  # retained eigenvalues closer than this (rel. to the largest) are flagged


@dataclass
class GramLift:
    """Inner-product matrix anchored at a reference point (its row/col are zero)."""

    matrix: np.ndarray
    reference: int


@dataclass
class LatentEstimate:
    """Recovered latent coordinates plus eigendecomposition diagnostics.

    ``coords`` has one row per point; the reference row is exactly zero.
    ``eigenvalues`` holds the retained spectrum in descending order (padded
    with zeros when fewer than the requested number were positive, in which
    case ``padded`` is set).  ``degenerate_spectrum`` flags retained
    eigenvalues that are numerically tied, where individual columns are only
    identified up to a rotation within the tied eigenspace.
    """

    coords: np.ndarray
    eigenvalues: np.ndarray
    reference: int
    n_discarded_negative: int = 0
    padded: bool = False
    degenerate_spectrum: bool = False


def scaled_distances(cov: CovarianceEstimate, spec: KernelSpec) -> np.ndarray:
    """Element-wise kernel inversion of the covariance into squared distances.

    The kernel's marginal variance is pinned to ``cov.sigma2_hat`` and the
    diagonal comes out exactly zero.  Off-diagonal entries must already lie in
    (0, sigma2_hat]; anything else propagates the kernel domain error, which
    signals a missing clamp/completion step upstream.
    """
    if cov.degenerate:
        raise DataError("covariance is degenerate (sigma2_hat <= 0); cannot invert kernel")
    kernel = replace(spec, sigma2=cov.sigma2_hat)
    S = np.array(cov.matrix, dtype=float)
    np.fill_diagonal(S, cov.sigma2_hat)  # model says k_ii = sigma2 exactly
    D = kernel_inverse(kernel, S)
    np.fill_diagonal(D, 0.0)
    return D


def select_reference(D: np.ndarray) -> int:
    """Index whose row-wise maximum distance is smallest; ties pick the lowest index.

    Large recovered distances are the noisiest, and every Gram-lift entry
    contains a distance to the reference, so the reference should be the point
    closest to everything else.
    """
    D = np.asarray(D, dtype=float)
    if D.ndim != 2 or D.shape[0] != D.shape[1] or D.shape[0] < 1:
        raise DataError(f"expected a square distance matrix, got shape {D.shape}")
    return int(np.argmin(D.max(axis=1)))


def gram_lift(D: np.ndarray, reference: int) -> GramLift:
    """Turn squared distances into inner products relative to a reference point.

    G[i, j] = (D[i, r] + D[r, j] - D[i, j]) / 2, with row and column r zeroed.
    For distances that come from an M-dimensional configuration this matrix is
    positive semi-definite of rank M.
    """
    D = np.asarray(D, dtype=float)
    T = D.shape[0]
    if not 0 <= reference < T:
        raise DataError(f"reference index {reference} out of range for T={T}")
    G = 0.5 * (D[:, [reference]] + D[[reference], :] - D)
    G[reference, :] = 0.0
    G[:, reference] = 0.0
    return GramLift(G, reference)


def top_m_psd_factor(gram: GramLift, n_components: int) -> LatentEstimate:
    """Best rank-M PSD factorization of the Gram lift via its top eigenpairs.

    Keeps the M algebraically largest eigenvalues that are positive and scales
    each eigenvector by the square root of its eigenvalue.  Negative
    eigenvalues (noise-induced indefiniteness) are discarded and counted; if
    fewer than M positive eigenvalues exist the missing columns are zero and
    ``padded`` is set.  Sign convention: each eigenvector is flipped so its
    largest-magnitude entry is positive, which makes results reproducible.
    """
    G = gram.matrix
    T = G.shape[0]
    if not 0 < n_components < T:
        raise DataError(f"need 0 < n_components < T, got n_components={n_components}, T={T}")
    try:
        evals, evecs = np.linalg.eigh(G)
    except np.linalg.LinAlgError as exc:
        raise NumericalError(f"eigendecomposition did not converge: {exc}") from exc
    evals = evals[::-1]
    evecs = evecs[:, ::-1]
    n_negative = int(np.sum(evals < 0))
    top = evals[:n_components]
    coords = np.zeros((T, n_components))
    kept = np.zeros(n_components)
    for m in range(n_components):
        if top[m] > 0:
            v = evecs[:, m]
            if v[int(np.argmax(np.abs(v)))] < 0:
                v = -v
            coords[:, m] = np.sqrt(top[m]) * v
            kept[m] = top[m]
    padded = bool(np.any(top <= 0))
    coords[gram.reference, :] = 0.0
    positive = kept[kept > 0]
    degenerate = bool(
        positive.size
        and np.any(np.abs(np.diff(evals[: positive.size + 1])) <= EIGENVALUE_TIE_RTOL * positive[0])
    )
    return LatentEstimate(
        coords=coords,
        eigenvalues=kept,
        reference=gram.reference,
        n_discarded_negative=n_negative,
        padded=padded,
        degenerate_spectrum=degenerate,
    )


def decompose_covariance(cov: CovarianceEstimate, spec: KernelSpec, n_components: int,
                         reference: int | None = None) -> LatentEstimate:
    """Run the core pipeline on a covariance whose entries are already invertible.

    This is the noiseless/exact entry point: no clamping or completion is
    applied, so off-diagonal entries must lie in (0, sigma2_hat].
    """
    D = scaled_distances(cov, spec)
    r = select_reference(D) if reference is None else int(reference)
    return top_m_psd_factor(gram_lift(D, r), n_components)


def ikd(X, spec: KernelSpec | None = None, n_components: int = 2,
        strategy: str = "none", s0_rel: float = 0.01,
        reference: int | None = None, statistic: str = "mean") -> LatentEstimate:
    """Recover latent coordinates from observations by inverse kernel decomposition.

    Parameters
    ----------
    X : array, shape (T, N)
        Observation matrix; rows are points.
    spec : KernelSpec
        Kernel family assumed to have generated the data.  Its sigma2 is
        ignored and replaced by the estimate from the sample covariance.
        Defaults to the squared exponential.
    n_components : int
        Latent dimensionality M (must satisfy T >= M + 1).
    strategy : {"none", "geodesic", "blockwise"}
        How to treat covariance entries at or below the threshold: clamp them
        ("none"), rebuild them from path products ("geodesic"), or solve
        fully-connected blocks separately and merge ("blockwise").
    s0_rel : float
        Threshold as a fraction of the estimated marginal variance.
    reference : int, optional
        Force the reference index instead of selecting it automatically
        (ignored by the blockwise strategy).
    statistic : {"mean", "median"}
        Diagonal statistic used for the marginal-variance estimate.
    """
    if spec is None:
        spec = KernelSpec("se")
    cov = sample_covariance(X, statistic=statistic)
    if cov.degenerate:
        raise DataError("observations are constant: estimated marginal variance is zero")
    if cov.n_points < n_components + 1:
        raise DataError(
            f"need at least n_components + 1 = {n_components + 1} points, got T={cov.n_points}"
        )
    if not 0 < s0_rel < 1:
        raise DataError(f"s0_rel must lie in (0, 1), got {s0_rel}")
    s0 = s0_rel * cov.sigma2_hat
    if strategy == "none":
        prepared = clamp_covariance(cov, s0)
    elif strategy == "geodesic":
        prepared = geodesic_completion(cov, s0)
    elif strategy == "blockwise":
        from .robustify import blockwise_from_covariance

        return blockwise_from_covariance(cov, spec, n_components, s0)
    else:
        raise DataError(f"unknown strategy {strategy!r}; expected none, geodesic or blockwise")
    return decompose_covariance(prepared, spec, n_components, reference=reference)
