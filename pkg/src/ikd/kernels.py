"""Stationary kernel families and their inverses.

Each kernel is a scalar map k = f(d) from the scaled squared distance
d = ||z_i - z_j||^2 / l^2 between two latent points to a covariance value.
Working with d rather than raw distances keeps the length-scale out of the
parameterization: latent coordinates are only identified up to an affine map,
so a global scale carries no information.

Supported families (sigma2 is the marginal variance; f(0) = sigma2 always):

    se          f(d) = sigma2 * exp(-d / 2)
    rq          f(d) = sigma2 * (1 + d / (2 alpha))^(-alpha)
    gamma_exp   f(d) = sigma2 * exp(-d^(gamma / 2)),   0 < gamma <= 2
    matern      f(d) = sigma2 * 2^(1-nu) / Gamma(nu) * x^nu * K_nu(x),
                with x = sqrt(2 nu d) and K_nu the modified Bessel function
                of the second kind

Every f is strictly decreasing on [0, inf), so the inverse on (0, sigma2] is
unique.  The first three families invert in closed form; the Matern family is
inverted numerically via bracket expansion followed by bisection.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.special import kve

from .errors import DataError, NumericalError

_FAMILY_ALIASES = {
    "se": "se",
    "squared_exponential": "se",
    "rbf": "se",
    "rq": "rq",
    "rational_quadratic": "rq",
    "gamma_exp": "gamma_exp",
    "gamma_exponential": "gamma_exp",
    "gamma-exp": "gamma_exp",
    "matern": "matern",
}


@dataclass(frozen=True)
class KernelSpec:
    """A stationary kernel family with its parameters.

    Parameters
    ----------
    family : str
        One of ``se``, ``rq``, ``gamma_exp``, ``matern`` (aliases such as
        ``squared_exponential`` are accepted).
    sigma2 : float
        Marginal variance, the kernel value at distance zero.  Must be > 0.
    alpha : float
        Shape of the rational quadratic family (> 0).  Ignored otherwise.
    gamma : float
        Exponent of the gamma-exponential family, in (0, 2].
    nu : float
        Smoothness of the Matern family (> 0).
    """

    family: str
    sigma2: float = 1.0
    alpha: float = 1.0
    gamma: float = 1.0
    nu: float = 1.5

    def __post_init__(self):
        name = _FAMILY_ALIASES.get(str(self.family).strip().lower().replace("-", "_"))
        if name is None:
            raise DataError(
                f"unknown kernel family {self.family!r}; expected one of "
                f"se, rq, gamma_exp, matern"
            )
        object.__setattr__(self, "family", name)
        if not self.sigma2 > 0:
            raise DataError(f"sigma2 must be positive, got {self.sigma2}")
        if self.family == "rq" and not self.alpha > 0:
            raise DataError(f"alpha must be positive, got {self.alpha}")
        if self.family == "gamma_exp" and not 0 < self.gamma <= 2:
            raise DataError(f"gamma must lie in (0, 2], got {self.gamma}")
        if self.family == "matern" and not self.nu > 0:
            raise DataError(f"nu must be positive, got {self.nu}")


def _matern_forward(nu: float, sigma2: float, d):
    """Matern kernel value at scaled squared distance d (array-friendly)."""
    d = np.asarray(d, dtype=float)
    x = np.sqrt(2.0 * nu * d)
    # Half-integer orders have closed polynomial-exponential forms.
    if nu == 0.5:
        out = sigma2 * np.exp(-x)
    elif nu == 1.5:
        out = sigma2 * (1.0 + x) * np.exp(-x)
    elif nu == 2.5:
        out = sigma2 * (1.0 + x + x * x / 3.0) * np.exp(-x)
    else:
        # x^nu * K_nu(x) evaluated as exp(nu log x - x) * kve(nu, x) to stay
        # finite for large x; the d = 0 limit is sigma2 exactly.
        coef = sigma2 * 2.0 ** (1.0 - nu) / math.gamma(nu)
        with np.errstate(divide="ignore", invalid="ignore"):
            body = coef * np.exp(nu * np.log(x) - x) * kve(nu, x)
        out = np.where(d > 0, body, sigma2)
    return out


def kernel_forward(spec: KernelSpec, d):
    """Evaluate the kernel k = f(d) at scaled squared distance(s) d >= 0.

    Accepts scalars or arrays; returns the same shape.
    """
    d_arr = np.asarray(d, dtype=float)
    if np.any(d_arr < 0):
        raise DataError(f"scaled squared distance must be >= 0, got min {d_arr.min()}")
    s2 = spec.sigma2
    if spec.family == "se":
        out = s2 * np.exp(-0.5 * d_arr)
    elif spec.family == "rq":
        out = s2 * (1.0 + d_arr / (2.0 * spec.alpha)) ** (-spec.alpha)
    elif spec.family == "gamma_exp":
        out = s2 * np.exp(-(d_arr ** (0.5 * spec.gamma)))
    else:
        out = _matern_forward(spec.nu, s2, d_arr)
    return float(out) if np.isscalar(d) or np.ndim(d) == 0 else out


def kernel_inverse(spec: KernelSpec, k):
    """Invert the kernel: the unique d >= 0 with f(d) = k.

    Values must lie in (0, sigma2]; anything outside signals that the caller
    failed to clamp or complete the covariance first, and raises.  Accepts
    scalars or arrays.
    """
    k_arr = np.asarray(k, dtype=float)
    s2 = spec.sigma2
    if k_arr.size and (np.any(k_arr <= 0) or np.any(k_arr > s2)):
        raise DataError(
            f"covariance values must lie in (0, sigma2={s2:g}]; "
            f"got range [{k_arr.min():g}, {k_arr.max():g}]"
        )
    if spec.family == "se":
        out = -2.0 * np.log(k_arr / s2)
    elif spec.family == "rq":
        a = spec.alpha
        out = 2.0 * a * ((k_arr / s2) ** (-1.0 / a) - 1.0)
    elif spec.family == "gamma_exp":
        out = (-np.log(k_arr / s2)) ** (2.0 / spec.gamma)
    else:
        out = matern_inverse_solve(spec.nu, s2, k_arr)
    out = np.maximum(out, 0.0)  # kill -0.0 at k == sigma2
    return float(out) if np.isscalar(k) or np.ndim(k) == 0 else out


def matern_inverse_solve(nu: float, sigma2: float, k, tol: float = 1e-12,
                         max_iter: int = 200):
    """Solve f(d) = k for the Matern kernel by bracketing + bisection.

    The bracket starts at [0, 1] and doubles its upper end until f lies below
    the target, then bisects until both the bracket width satisfies
    ``hi - lo <= tol * (1 + d)`` and the residual satisfies
    ``|f(d) - k| <= tol * sigma2``.  Accepts scalar or array ``k``.

    Raises
    ------
    NumericalError
        If the combined iteration budget ``max_iter`` is exhausted.
    """
    if not nu > 0 or not sigma2 > 0:
        raise DataError(f"need nu > 0 and sigma2 > 0, got nu={nu}, sigma2={sigma2}")
    if not tol > 0:
        raise DataError(f"tol must be positive, got {tol}")
    k_arr = np.asarray(k, dtype=float)
    if k_arr.size and (np.any(k_arr <= 0) or np.any(k_arr > sigma2)):
        raise DataError(
            f"covariance values must lie in (0, sigma2={sigma2:g}]; "
            f"got range [{k_arr.min():g}, {k_arr.max():g}]"
        )
    flat = np.atleast_1d(k_arr).ravel().astype(float)
    d = np.zeros_like(flat)
    solve = flat < sigma2  # k == sigma2 -> d = 0 exactly
    if solve.any():
        target = flat[solve]
        lo = np.zeros_like(target)
        hi = np.ones_like(target)
        iters = 0
        while True:
            expand = _matern_forward(nu, sigma2, hi) > target
            if not expand.any():
                break
            lo = np.where(expand, hi, lo)
            hi = np.where(expand, 2.0 * hi, hi)
            iters += 1
            if iters >= max_iter:
                raise NumericalError(
                    f"Matern inversion failed to bracket within {max_iter} doublings "
                    f"(nu={nu}, sigma2={sigma2})"
                )
        result = None
        for _ in range(max_iter - iters):
            mid = 0.5 * (lo + hi)
            f_mid = _matern_forward(nu, sigma2, mid)
            done = ((hi - lo) <= tol * (1.0 + mid)) & (np.abs(f_mid - target) <= tol * sigma2)
            if done.all():
                result = mid
                break
            go_right = f_mid > target
            lo = np.where(go_right, mid, lo)
            hi = np.where(go_right, hi, mid)
        if result is None:
            raise NumericalError(
                f"Matern inversion did not converge within {max_iter} iterations "
                f"(nu={nu}, sigma2={sigma2}, tol={tol})"
            )
        d[solve] = result
    if np.ndim(k) == 0:
        return float(d[0])
    return d.reshape(k_arr.shape)
