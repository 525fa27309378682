"""Synthetic benchmark data: a smooth latent trajectory pushed through one of
three observation maps (GP draw, random sinusoids, Gaussian bumps), plus
i.i.d. Gaussian noise.  Everything is deterministic given the seed.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import DataError, NumericalError

LATENT_VARIANCE = 6.0
LATENT_TIMESCALE = 5.0
BUMP_AMPLITUDE = 20.0
BUMP_GRID_POINTS_PER_AXIS = 100
BUMP_GRID_HALF_WIDTH = 6.0
DEFAULT_NOISE = {"gp": 0.05, "sinusoid": 0.1, "bump": 0.05}


@dataclass
class SyntheticDataset:
    latent: np.ndarray
    observations: np.ndarray
    mapping: str
    seed: int
    params: dict = field(default_factory=dict)


def _rng(seed) -> np.random.Generator:
    if isinstance(seed, np.random.Generator):
        return seed
    return np.random.default_rng(seed)


def sample_mvn(mean, cov, seed, size: int = 1) -> np.ndarray:
    """Draw from N(mean, cov) via Cholesky with adaptive diagonal jitter.

    A zero covariance returns the mean exactly.  Otherwise the factorization
    is retried with jitter growing from 1e-10 to 1e-4 of the mean diagonal;
    running out of jitter raises.

    Returns shape (T,) for ``size == 1``, else (T, size).
    """
    mean = np.asarray(mean, dtype=float).ravel()
    cov = np.asarray(cov, dtype=float)
    T = mean.size
    if cov.shape != (T, T):
        raise DataError(f"covariance shape {cov.shape} does not match mean length {T}")
    rng = _rng(seed)
    if not cov.any():
        out = np.tile(mean[:, None], (1, size))
        return out[:, 0] if size == 1 else out
    scale = float(np.mean(np.diag(cov)))
    L = None
    for jitter in [0.0] + [scale * 10.0 ** e for e in range(-10, -3)]:
        try:
            L = np.linalg.cholesky(cov + jitter * np.eye(T) if jitter else cov)
            break
        except np.linalg.LinAlgError:
            continue
    if L is None:
        raise NumericalError(
            f"Cholesky failed even with jitter up to {scale * 1e-4:g}; "
            f"covariance is not positive semi-definite"
        )
    draws = rng.standard_normal((T, size))
    out = mean[:, None] + L @ draws
    return out[:, 0] if size == 1 else out


def gen_latent(T: int, M: int, seed, variance: float = LATENT_VARIANCE,
               timescale: float = LATENT_TIMESCALE) -> np.ndarray:
    """Latent trajectory: each of the M coordinates is an independent draw
    from a zero-mean Gaussian with covariance variance * exp(-|i - j| / timescale)
    over the integer time indices.
    """
    if T < 1 or M < 1:
        raise DataError(f"need T >= 1 and M >= 1, got T={T}, M={M}")
    idx = np.arange(T, dtype=float)
    cov = variance * np.exp(-np.abs(idx[:, None] - idx[None, :]) / timescale)
    Z = sample_mvn(np.zeros(T), cov, seed, size=M)
    return Z.reshape(T, M)


def _sq_distances(Z: np.ndarray) -> np.ndarray:
    sq = np.sum(Z * Z, axis=1)
    D = sq[:, None] + sq[None, :] - 2.0 * (Z @ Z.T)
    np.fill_diagonal(D, 0.0)
    return np.maximum(D, 0.0)


def gp_map(Z, N: int, sigma2: float = 1.0, length_scale: float = 3.0,
           noise_sd: float = 0.05, seed=None) -> np.ndarray:
    """Observations as N i.i.d. columns drawn from a zero-mean GP over the
    latent points, squared-exponential kernel, plus observation noise.
    """
    Z = np.atleast_2d(np.asarray(Z, dtype=float))
    if N < 1:
        raise DataError(f"need N >= 1 columns, got {N}")
    rng = _rng(seed)
    K = sigma2 * np.exp(-_sq_distances(Z) / (2.0 * length_scale**2))
    X = sample_mvn(np.zeros(Z.shape[0]), K, rng, size=N)
    X = X.reshape(Z.shape[0], N)
    if noise_sd > 0:
        X = X + noise_sd * rng.standard_normal(X.shape)
    return X


def sinusoid_map(Z, N: int, noise_sd: float = 0.1, seed=None,
                 frequencies=None, phases=None) -> np.ndarray:
    """Observations x[t, n] = sin(sum_m w[n, m] z[t, m] + phi[n]) + noise.

    Frequencies are U(-1, 1), phases U(-pi, pi), drawn once per dataset;
    explicit ``frequencies`` (N, M) / ``phases`` (N,) override the draws.
    """
    Z = np.atleast_2d(np.asarray(Z, dtype=float))
    T, M = Z.shape
    rng = _rng(seed)
    if frequencies is None:
        frequencies = rng.uniform(-1.0, 1.0, size=(N, M))
    else:
        frequencies = np.asarray(frequencies, dtype=float)
        if frequencies.shape != (N, M):
            raise DataError(
                f"frequencies shape {frequencies.shape} does not match (N, M)=({N}, {M})"
            )
    if phases is None:
        phases = rng.uniform(-np.pi, np.pi, size=N)
    else:
        phases = np.asarray(phases, dtype=float).ravel()
        if phases.size != N:
            raise DataError(f"need {N} phases, got {phases.size}")
    X = np.sin(Z @ frequencies.T + phases[None, :])
    if noise_sd > 0:
        X = X + noise_sd * rng.standard_normal(X.shape)
    return X


def bump_grid() -> np.ndarray:
    """The fixed candidate grid of bump centers: 100 x 100 points on [-6, 6]^2."""
    g = np.linspace(-BUMP_GRID_HALF_WIDTH, BUMP_GRID_HALF_WIDTH, BUMP_GRID_POINTS_PER_AXIS)
    gx, gy = np.meshgrid(g, g, indexing="ij")
    return np.column_stack([gx.ravel(), gy.ravel()])


def bump_map(Z, N: int, noise_sd: float = 0.05, seed=None,
             amplitude: float = BUMP_AMPLITUDE, centers=None) -> np.ndarray:
    """Observations x[t, n] = amplitude * exp(-||z_t - c_n||^2) + noise, with
    centers sampled without replacement from the fixed grid.
    """
    Z = np.atleast_2d(np.asarray(Z, dtype=float))
    if Z.shape[1] != 2:
        raise DataError(f"bump map needs 2-D latent, got M={Z.shape[1]}")
    rng = _rng(seed)
    if centers is None:
        grid = bump_grid()
        if N > grid.shape[0]:
            raise DataError(
                f"cannot place {N} bump centers: only {grid.shape[0]} grid points available"
            )
        centers = grid[rng.choice(grid.shape[0], size=N, replace=False)]
    else:
        centers = np.asarray(centers, dtype=float)
        if centers.shape != (N, 2):
            raise DataError(f"centers shape {centers.shape} does not match (N, 2)=({N}, 2)")
    diff = Z[:, None, :] - centers[None, :, :]
    X = amplitude * np.exp(-np.sum(diff * diff, axis=2))
    if noise_sd > 0:
        X = X + noise_sd * rng.standard_normal(X.shape)
    return X


def generate_dataset(mapping: str, T: int, M: int, N: int, seed: int,
                     noise_sd: float | None = None, sigma2: float = 1.0,
                     length_scale: float = 3.0,
                     amplitude: float = BUMP_AMPLITUDE) -> SyntheticDataset:
    """Latent trajectory plus observations for one of the three mappings.

    The latent draw and the observation map consume a single seeded stream, so
    a dataset is fully determined by (mapping, T, M, N, seed, params).
    """
    if mapping not in DEFAULT_NOISE:
        raise DataError(f"unknown mapping {mapping!r}; expected gp, sinusoid or bump")
    if noise_sd is None:
        noise_sd = DEFAULT_NOISE[mapping]
    rng = np.random.default_rng(seed)
    Z = gen_latent(T, M, rng)
    params = {"T": T, "M": M, "N": N, "noise_sd": noise_sd}
    if mapping == "gp":
        X = gp_map(Z, N, sigma2=sigma2, length_scale=length_scale, noise_sd=noise_sd, seed=rng)
        params.update(sigma2=sigma2, length_scale=length_scale)
    elif mapping == "sinusoid":
        X = sinusoid_map(Z, N, noise_sd=noise_sd, seed=rng)
    else:
        X = bump_map(Z, N, noise_sd=noise_sd, seed=rng, amplitude=amplitude)
        params.update(amplitude=amplitude)
    return SyntheticDataset(Z, X, mapping, seed, params)
