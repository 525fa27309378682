"""Blockwise latent recovery: solve fully-connected blocks, then merge rigidly.

When many covariance entries are too weak to invert, the thresholded graph
still contains fully connected subsets (cliques) inside which every pairwise
covariance is reliable.  Each clique is decomposed on its own, and the pieces
are stitched into one global frame through the points they share: any two
blocks sharing more than M points admit a unique optimal orthogonal alignment.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .covariance import CovarianceEstimate, ThresholdedGraph, sample_covariance, threshold_graph
from .core import LatentEstimate, decompose_covariance
from .errors import DataError, DisconnectedGraphError, MergeError
from .kernels import KernelSpec


@dataclass
class CliqueCover:
    """Ordered maximal cliques whose union covers every point index."""

    cliques: list[tuple[int, ...]]

    def __len__(self) -> int:
        return len(self.cliques)

    def __iter__(self):
        return iter(self.cliques)


@dataclass
class RigidTransform:
    """Orthogonal map plus translation; reflections are allowed."""

    rotation: np.ndarray
    translation: np.ndarray

    def apply(self, points: np.ndarray) -> np.ndarray:
        return np.asarray(points, dtype=float) @ self.rotation.T + self.translation


def _pivot_branch_order(P: set, X: set, adj: list[set]) -> list:
    """Candidates P \\ N(pivot); pivot maximizes |N(u) & P|, ties -> lowest index."""
    pivot, best = -1, -1
    for u in sorted(P | X):
        d = len(adj[u] & P)
        if d > best:
            pivot, best = u, d
    return sorted(P - adj[pivot])


def _bron_kerbosch_pivot(adj: list[set]):
    """Yield maximal cliques (as sorted tuples) with deterministic ordering.

    Iterative formulation of the pivoting variant; candidate vertices and
    pivot ties are always taken in index order, so the emission order is a
    pure function of the graph.
    """
    n = len(adj)
    if n == 0:
        return
    clique: list[int] = []
    P0, X0 = set(range(n)), set()
    # frame = [P, X, iterator over branch vertices, vertex currently explored]
    stack = [[P0, X0, iter(_pivot_branch_order(P0, X0, adj)), None]]
    while stack:
        frame = stack[-1]
        P, X, it, current = frame
        if current is not None:
            # returning from a child: move the explored vertex from P to X
            P.remove(current)
            X.add(current)
            clique.pop()
            frame[3] = None
        v = next(it, None)
        if v is None:
            stack.pop()
            continue
        new_p = P & adj[v]
        new_x = X & adj[v]
        clique.append(v)
        if not new_p and not new_x:
            yield tuple(sorted(clique))
            P.remove(v)
            X.add(v)
            clique.pop()
        elif not new_p:
            # some excluded vertex extends the clique: not maximal, prune
            P.remove(v)
            X.add(v)
            clique.pop()
        else:
            frame[3] = v
            stack.append([new_p, new_x, iter(_pivot_branch_order(new_p, new_x, adj)), None])


def maximal_clique_cover(graph: ThresholdedGraph) -> CliqueCover:
    """Emit maximal cliques until their union covers every index.

    Enumeration stops as soon as the cover is complete, so only up to T
    cliques are ever produced; exceeding that bound aborts (it signals a graph
    on which the blockwise strategy is hopeless).
    """
    if not graph.connected:
        raise DisconnectedGraphError(
            f"thresholded graph has {graph.n_components} components at s0={graph.s0:g}; "
            f"lower s0 or use the geodesic strategy"
        )
    T = graph.mask.shape[0]
    off = graph.mask.copy()
    np.fill_diagonal(off, False)
    adj = [set(np.flatnonzero(off[i]).tolist()) for i in range(T)]
    covered: set[int] = set()
    cliques: list[tuple[int, ...]] = []
    for clique in _bron_kerbosch_pivot(adj):
        cliques.append(clique)
        covered.update(clique)
        if len(covered) == T:
            return CliqueCover(cliques)
        if len(cliques) >= T:
            raise DataError(
                f"clique cover did not close after {T} maximal cliques; "
                f"lower s0 or use the geodesic strategy"
            )
    raise DataError("clique enumeration ended before covering all points")  # unreachable on valid input


def rigid_align(source: np.ndarray, target: np.ndarray) -> RigidTransform:
    """Least-squares orthogonal alignment of two matched point sets.

    Returns the orthogonal matrix R (reflections permitted, since the latent
    is only defined up to an orthogonal map) and translation t minimizing
    sum ||R s_i + t - t_i||^2.

    Raises
    ------
    DataError
        If the sets are too small (need at least dim + 1 points) or affinely
        degenerate (rank below the dimension), which leaves the alignment
        ambiguous.
    """
    A = np.asarray(source, dtype=float)
    B = np.asarray(target, dtype=float)
    if A.shape != B.shape or A.ndim != 2:
        raise DataError(f"point sets must share shape, got {A.shape} vs {B.shape}")
    n, m = A.shape
    if n < m + 1:
        raise DataError(f"need at least dim + 1 = {m + 1} matched points, got {n}")
    ca, cb = A.mean(axis=0), B.mean(axis=0)
    A0, B0 = A - ca, B - cb
    for name, mat in (("source", A0), ("target", B0)):
        s = np.linalg.svd(mat, compute_uv=False)
        tol = max(n, m) * np.finfo(float).eps * (s[0] if s.size else 0.0)
        if np.sum(s > tol) < m:
            raise DataError(f"{name} points are affinely degenerate (rank < {m}); alignment ambiguous")
    U, _, Vt = np.linalg.svd(A0.T @ B0)
    R = Vt.T @ U.T
    t = cb - R @ ca
    return RigidTransform(R, t)


def _solve_clique(cov: CovarianceEstimate, spec: KernelSpec, n_components: int,
                  clique: tuple[int, ...]) -> LatentEstimate:
    idx = np.asarray(clique, dtype=int)
    if idx.size < n_components + 1:
        raise MergeError(
            f"clique {clique} has {idx.size} points, too few for {n_components} latent "
            f"dimensions; lower s0 or use the geodesic strategy"
        )
    sub = np.minimum(cov.matrix[np.ix_(idx, idx)], cov.sigma2_hat)
    np.fill_diagonal(sub, cov.sigma2_hat)
    return decompose_covariance(CovarianceEstimate(sub, cov.sigma2_hat), spec, n_components)


def blockwise_from_covariance(cov: CovarianceEstimate, spec: KernelSpec, n_components: int,
                              s0: float, cover: CliqueCover | None = None) -> LatentEstimate:
    """Per-clique decomposition followed by greedy rigid merging.

    The largest clique seeds the global frame; thereafter the unplaced clique
    sharing the most points with the placed set is aligned on those shared
    points and dropped in.  Points appearing in several cliques end up at the
    average of their transformed positions.  Merging requires every alignment
    to rest on strictly more than ``n_components`` shared points.
    """
    if cover is None:
        cover = maximal_clique_cover(threshold_graph(cov, s0))
    cliques = list(cover)
    if not cliques:
        raise DataError("empty clique cover")
    T = cov.n_points
    if set().union(*cliques) != set(range(T)):
        raise DataError("clique cover does not cover every point index")
    solutions = [_solve_clique(cov, spec, n_components, c) for c in cliques]

    order = list(range(len(cliques)))
    seed = max(order, key=lambda i: len(cliques[i]))  # ties: first emitted
    sums = np.zeros((T, n_components))
    counts = np.zeros(T)

    def place(i: int, coords: np.ndarray) -> None:
        idx = np.asarray(cliques[i], dtype=int)
        sums[idx] += coords
        counts[idx] += 1.0

    place(seed, solutions[seed].coords)
    placed = set(cliques[seed])
    remaining = [i for i in order if i != seed]
    while remaining:
        overlaps = [len(placed.intersection(cliques[i])) for i in remaining]
        best_pos = int(np.argmax(overlaps))
        if overlaps[best_pos] <= n_components:
            raise MergeError(
                f"no remaining clique shares more than {n_components} points with the "
                f"merged set (best overlap: {overlaps[best_pos]}); lower s0 or use the "
                f"geodesic strategy"
            )
        i = remaining.pop(best_pos)
        members = list(cliques[i])
        shared = sorted(placed.intersection(members))
        local_pos = {p: row for row, p in enumerate(members)}
        src = solutions[i].coords[[local_pos[p] for p in shared]]
        tgt = sums[shared] / counts[shared, None]
        transform = rigid_align(src, tgt)
        place(i, transform.apply(solutions[i].coords))
        placed.update(members)

    coords = sums / counts[:, None]
    seed_sol = solutions[seed]
    return LatentEstimate(
        coords=coords,
        eigenvalues=seed_sol.eigenvalues,
        reference=int(cliques[seed][seed_sol.reference]),
        n_discarded_negative=sum(s.n_discarded_negative for s in solutions),
        padded=any(s.padded for s in solutions),
        degenerate_spectrum=any(s.degenerate_spectrum for s in solutions),
    )


def blockwise_ikd(X, spec: KernelSpec | None = None, n_components: int = 2,
                  s0: float | None = None, s0_rel: float = 0.01) -> LatentEstimate:
    """Blockwise pipeline straight from observations.

    ``s0`` is the absolute covariance threshold; when omitted it defaults to
    ``s0_rel`` times the estimated marginal variance.
    """
    if spec is None:
        spec = KernelSpec("se")
    cov = sample_covariance(X)
    if cov.degenerate:
        raise DataError("observations are constant: estimated marginal variance is zero")
    threshold = s0 if s0 is not None else s0_rel * cov.sigma2_hat
    return blockwise_from_covariance(cov, spec, n_components, threshold)
