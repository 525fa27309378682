"""Evaluation protocols: affine-aligned R^2 against a known latent, k-nearest
neighbour cross-validation on labels, and a PCA baseline reducer.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DataError


@dataclass
class AlignmentReport:
    """Best affine fit of an estimate onto the truth, with per-dimension R^2."""

    transform: np.ndarray
    offset: np.ndarray
    r2_per_dim: np.ndarray
    r2_mean: float
    rank_deficient: bool = False


def affine_align(estimated, truth) -> AlignmentReport:
    """Fit truth ~ estimated @ A + b by least squares and score each dimension.

    R^2 is computed per truth dimension with the aligned estimate as the
    prediction, then averaged.  The metric is invariant to any invertible
    affine transformation of the estimate.  A rank-deficient estimate is still
    scored (minimum-norm solution) but flagged.
    """
    Z = np.asarray(estimated, dtype=float)
    Y = np.asarray(truth, dtype=float)
    if Z.shape != Y.shape or Z.ndim != 2:
        raise DataError(f"latent shapes must match, got {Z.shape} vs {Y.shape}")
    T, M = Z.shape
    if T <= M + 1:
        raise DataError(f"need more than M + 1 = {M + 1} points to fit an affine map, got T={T}")
    design = np.column_stack([Z, np.ones(T)])
    coef, _, rank, _ = np.linalg.lstsq(design, Y, rcond=None)
    A, b = coef[:M, :], coef[M, :]
    pred = design @ coef
    ss_res = np.sum((Y - pred) ** 2, axis=0)
    ss_tot = np.sum((Y - Y.mean(axis=0)) ** 2, axis=0)
    with np.errstate(divide="ignore", invalid="ignore"):
        r2 = np.where(ss_tot > 0, 1.0 - ss_res / ss_tot, np.where(ss_res == 0, 1.0, 0.0))
    return AlignmentReport(
        transform=A,
        offset=b,
        r2_per_dim=r2,
        r2_mean=float(r2.mean()),
        rank_deficient=rank < M + 1,
    )


def _stratified_folds(codes: np.ndarray, folds: int, seed) -> np.ndarray:
    rng = np.random.default_rng(seed) if not isinstance(seed, np.random.Generator) else seed
    fold_of = np.empty(codes.size, dtype=int)
    for cls in np.unique(codes):
        idx = np.flatnonzero(codes == cls)
        perm = idx[rng.permutation(idx.size)]
        fold_of[perm] = np.arange(perm.size) % folds
    return fold_of


def knn_cv(coords, labels, k: int, folds: int = 5, seed: int = 0) -> float:
    """Mean held-out accuracy of a k-NN majority vote under stratified CV.

    Distances are Euclidean in the raw latent coordinates (no per-dimension
    standardization).  Distance ties prefer the smaller point index, vote ties
    the smallest label; ``k`` is capped at the training-fold size.
    """
    Z = np.atleast_2d(np.asarray(coords, dtype=float))
    y = np.asarray(labels).ravel()
    if Z.shape[0] != y.size:
        raise DataError(f"{Z.shape[0]} points but {y.size} labels")
    if folds < 2:
        raise DataError(f"need at least 2 folds, got {folds}")
    if k < 1:
        raise DataError(f"k must be >= 1, got {k}")
    classes, codes = np.unique(y, return_inverse=True)
    smallest = np.bincount(codes).min()
    if smallest < folds:
        raise DataError(
            f"every class needs at least {folds} members for {folds}-fold CV; "
            f"smallest class has {smallest}"
        )
    fold_of = _stratified_folds(codes, folds, seed)
    accuracies = []
    for f in range(folds):
        test = fold_of == f
        train = ~test
        Ztr, Zte = Z[train], Z[test]
        ytr, yte = codes[train], codes[test]
        k_eff = min(k, Ztr.shape[0])
        d2 = (
            np.sum(Zte * Zte, axis=1)[:, None]
            + np.sum(Ztr * Ztr, axis=1)[None, :]
            - 2.0 * (Zte @ Ztr.T)
        )
        neighbours = np.argsort(d2, axis=1, kind="stable")[:, :k_eff]
        votes = np.zeros((Zte.shape[0], classes.size), dtype=int)
        rows = np.repeat(np.arange(Zte.shape[0]), k_eff)
        np.add.at(votes, (rows, ytr[neighbours].ravel()), 1)
        pred = np.argmax(votes, axis=1)  # ties resolve to the smallest label
        accuracies.append(float(np.mean(pred == yte)))
    return float(np.mean(accuracies))


def pca_baseline(X, n_components: int) -> np.ndarray:
    """Principal-component scores of the column-centered observations.

    Works through the T x T Gram matrix or the N x N covariance, whichever is
    smaller.  Each score column is sign-fixed so its largest-magnitude entry
    is positive.
    """
    X = np.asarray(X, dtype=float)
    if X.ndim != 2:
        raise DataError(f"expected a 2-D observation matrix, got shape {X.shape}")
    T, N = X.shape
    if not 0 < n_components <= min(T, N):
        raise DataError(
            f"need 0 < n_components <= min(T, N) = {min(T, N)}, got {n_components}"
        )
    Xc = X - X.mean(axis=0)
    if T <= N:
        evals, evecs = np.linalg.eigh(Xc @ Xc.T)
        evals, evecs = evals[::-1][:n_components], evecs[:, ::-1][:, :n_components]
        scores = evecs * np.sqrt(np.maximum(evals, 0.0))
    else:
        evals, evecs = np.linalg.eigh(Xc.T @ Xc)
        scores = Xc @ evecs[:, ::-1][:, :n_components]
    for m in range(scores.shape[1]):
        col = scores[:, m]
        if col.any() and col[int(np.argmax(np.abs(col)))] < 0:
            scores[:, m] = -col
    return scores
