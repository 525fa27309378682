"""Sample covariance estimation, thresholding, and geodesic completion.

The sample covariance S of the observations is the empirical stand-in for the
kernel matrix.  Entries near or below zero are useless to the kernel inverse
(its domain is (0, sigma2]), so before inversion they are either clamped to a
floor (cheap fallback) or replaced along the strong-edge graph by the best
product of reliable covariances (geodesic completion).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DataError, DisconnectedGraphError


@dataclass
class CovarianceEstimate:
    """A T x T symmetric covariance matrix plus its estimated marginal variance."""

    matrix: np.ndarray
    sigma2_hat: float

    @property
    def n_points(self) -> int:
        return self.matrix.shape[0]

    @property
    def degenerate(self) -> bool:
        """True when the estimated marginal variance is not positive."""
        return not self.sigma2_hat > 0


@dataclass
class ThresholdedGraph:
    """Covariance graph keeping only entries above the threshold s0.

    ``weights[i, j]`` carries the covariance (clamped from above at
    sigma2_hat) where an edge is present and 0 elsewhere; the diagonal is
    always present.  ``n_components`` counts connected components so callers
    can detect graphs the completion strategies cannot handle.
    """

    weights: np.ndarray
    mask: np.ndarray
    s0: float
    sigma2_hat: float
    n_components: int

    @property
    def connected(self) -> bool:
        return self.n_components == 1


def sample_covariance(X, statistic: str = "mean") -> CovarianceEstimate:
    """Unbiased sample covariance of the rows of X over its N columns.

    Parameters
    ----------
    X : array, shape (T, N)
        Observations; rows are points, columns are output dimensions.
    statistic : {"mean", "median"}
        How to summarize the diagonal into the marginal-variance estimate.

    Returns
    -------
    CovarianceEstimate
        With ``matrix`` exactly symmetric (upper triangle mirrored).
    """
    X = np.asarray(X, dtype=float)
    if X.ndim != 2:
        raise DataError(f"expected a 2-D observation matrix, got shape {X.shape}")
    T, N = X.shape
    if T < 2:
        raise DataError(f"need at least 2 observation rows, got T={T}")
    if N < 2:
        raise DataError(f"need at least 2 observation columns, got N={N}")
    Xc = X - X.mean(axis=1, keepdims=True)
    C = (Xc @ Xc.T) / (N - 1)
    S = np.triu(C) + np.triu(C, 1).T
    diag = np.diag(S)
    if statistic == "mean":
        sigma2_hat = float(diag.mean())
    elif statistic == "median":
        sigma2_hat = float(np.median(diag))
    else:
        raise DataError(f"unknown diagonal statistic {statistic!r}")
    return CovarianceEstimate(S, sigma2_hat)


def clamp_covariance(cov: CovarianceEstimate, s0: float) -> CovarianceEstimate:
    """Clamp every off-diagonal entry into [s0, sigma2_hat]; diagonal set to sigma2_hat.

    The cheap fallback used by the "none" strategy so the pipeline always has
    invertible covariance values to work with.
    """
    s2 = cov.sigma2_hat
    if not 0 < s0 < s2:
        raise DataError(f"need 0 < s0 < sigma2_hat, got s0={s0}, sigma2_hat={s2}")
    S = np.clip(cov.matrix, s0, s2)
    np.fill_diagonal(S, s2)
    return CovarianceEstimate(S, s2)


def _count_components(adj: np.ndarray) -> int:
    """Connected components of a boolean adjacency matrix (diagonal ignored)."""
    T = adj.shape[0]
    off = adj.copy()
    np.fill_diagonal(off, False)
    unvisited = np.ones(T, dtype=bool)
    count = 0
    while unvisited.any():
        count += 1
        comp = np.zeros(T, dtype=bool)
        comp[int(np.argmax(unvisited))] = True
        frontier = comp.copy()
        while frontier.any():
            nxt = off[frontier].any(axis=0) & ~comp
            comp |= nxt
            frontier = nxt
        unvisited &= ~comp
    return count


def threshold_graph(cov: CovarianceEstimate, s0: float) -> ThresholdedGraph:
    """Graph with an edge (i, j) wherever the covariance exceeds s0.

    Edge weights above sigma2_hat are clamped to sigma2_hat so that every
    weight normalizes into (0, 1].  The diagonal is always present.
    """
    if not s0 > 0:
        raise DataError(f"s0 must be positive, got {s0}")
    if cov.degenerate:
        raise DataError("cannot threshold a degenerate covariance (sigma2_hat <= 0)")
    S = cov.matrix
    s2 = cov.sigma2_hat
    mask = S > s0
    np.fill_diagonal(mask, True)
    weights = np.where(mask, np.minimum(S, s2), 0.0)
    np.fill_diagonal(weights, s2)
    return ThresholdedGraph(weights, mask, s0, s2, _count_components(mask))


def _max_product_from(W: np.ndarray, src: int) -> np.ndarray:
    """Best path product from ``src`` over normalized weights W in (0, 1].

    Dense Dijkstra in product space: repeatedly settle the unfinished node
    with the largest product and relax its neighbours.  Absent edges carry
    weight 0, which no relaxation can ever improve on, so unreachable nodes
    finish at 0.  Products are accumulated left-to-right along each path.
    """
    T = W.shape[0]
    best = np.zeros(T)
    best[src] = 1.0
    done = np.zeros(T, dtype=bool)
    for _ in range(T):
        candidates = np.where(done, -1.0, best)
        u = int(np.argmax(candidates))
        if candidates[u] <= 0.0:
            break
        done[u] = True
        relax = best[u] * W[u]
        improve = ~done & (relax > best)
        best[improve] = relax[improve]
    return best


def geodesic_completion(cov: CovarianceEstimate, s0: float) -> CovarianceEstimate:
    """Replace weak covariances by the best product of strong ones along a path.

    Every entry s_ij <= s0 is rebuilt as ``sigma2_hat * max over paths of the
    product of (s_e / sigma2_hat)`` where each traversed edge satisfies
    s_e > s0.  Entries above s0 are kept (clamped from above at sigma2_hat,
    diagonal set to sigma2_hat), so the output is ready for kernel inversion.

    Raises
    ------
    DisconnectedGraphError
        If some weak pair has no connecting path of strong edges; lower s0 or
        use the blockwise strategy.
    """
    graph = threshold_graph(cov, s0)
    s2 = graph.sigma2_hat
    out = np.minimum(cov.matrix, s2)
    np.fill_diagonal(out, s2)
    weak = ~graph.mask
    if not weak.any():
        return CovarianceEstimate(out, s2)
    W = graph.weights / s2
    T = out.shape[0]
    for i in range(T):
        needs = np.flatnonzero(weak[i] & (np.arange(T) > i))
        if needs.size == 0:
            continue
        best = _max_product_from(W, i)
        unreachable = needs[best[needs] <= 0.0]
        if unreachable.size:
            j = int(unreachable[0])
            raise DisconnectedGraphError(
                f"no path of covariances above s0={s0:g} connects points {i} and {j}; "
                f"lower s0 or switch strategy"
            )
        out[i, needs] = s2 * best[needs]
        out[needs, i] = out[i, needs]
    return CovarianceEstimate(out, s2)
