"""Scalar and bivariate Gaussian numerics plus the 2x2 covariance algebra.

Everything else in the package is built on the functions here: the standard
normal CDF and its tail-stable survival counterpart, the covariance matrix of
the coupled Brownian pair evaluated at a time pair (s, t), the centered
bivariate normal density, the bivariate survival (upper-orthant) probability,
and the quadratic form / weight vector attached to a threshold ratio.

All functions are pure and thread-safe.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from scipy import integrate
from scipy.special import log_ndtr

from .errors import NumericalError, ParameterError

_SQRT2 = math.sqrt(2.0)
_TWO_PI = 2.0 * math.pi

#: Absolute accuracy target for the bivariate survival integral.
BIV_SURVIVAL_ABS_TOL = 1e-11


def norm_pdf(x: float) -> float:
    """Standard normal density."""
    return math.exp(-0.5 * x * x) / math.sqrt(_TWO_PI)


def norm_cdf(x: float) -> float:
    """Standard normal CDF, accurate to ~1e-15 absolute on the real line."""
    if math.isnan(x):
        raise ParameterError("norm_cdf: x is NaN")
    return 0.5 * math.erfc(-x / _SQRT2)


def norm_sf(x: float) -> float:
    """Upper tail of the standard normal.

    Evaluated through ``erfc`` so the far tail keeps relative accuracy
    instead of underflowing the way ``1 - norm_cdf(x)`` would.
    """
    if math.isnan(x):
        raise ParameterError("norm_sf: x is NaN")
    return 0.5 * math.erfc(x / _SQRT2)


def log_norm_cdf(x: float) -> float:
    """log of the standard normal CDF, stable for very negative x."""
    return float(log_ndtr(x))


@dataclass(frozen=True)
class Matrix2:
    """Symmetric 2x2 matrix stored as its three distinct entries."""

    m11: float
    m12: float
    m22: float

    @property
    def det(self) -> float:
        return self.m11 * self.m22 - self.m12 * self.m12

    def is_pos_def(self) -> bool:
        return self.m11 > 0.0 and self.det > 0.0

    def inv(self) -> "Matrix2":
        d = self.det
        if d <= 0.0:
            raise ParameterError(f"Matrix2 is singular or indefinite (det={d})")
        return Matrix2(self.m22 / d, -self.m12 / d, self.m11 / d)

    def solve(self, x: float, y: float) -> tuple[float, float]:
        """Return ``M^{-1} (x, y)^T``."""
        d = self.det
        if d <= 0.0:
            raise ParameterError(f"Matrix2 is singular or indefinite (det={d})")
        return ((self.m22 * x - self.m12 * y) / d, (self.m11 * y - self.m12 * x) / d)

    def quad_form(self, x: float, y: float) -> float:
        """Return ``(x, y) M^{-1} (x, y)^T``."""
        sx, sy = self.solve(x, y)
        return x * sx + y * sy


def brownian_cov(s: float, t: float, rho: float) -> Matrix2:
    """Covariance matrix of the coupled pair observed at times (s, t).

    The pair has standard Brownian marginals with constant correlation
    ``rho``, so the cross term is ``rho * min(s, t)``.
    """
    if not (s > 0.0 and t > 0.0):
        raise ParameterError(f"brownian_cov: need s, t > 0, got ({s}, {t})")
    if not abs(rho) < 1.0:
        raise ParameterError(f"brownian_cov: need |rho| < 1, got {rho}")
    return Matrix2(s, rho * min(s, t), t)


def biv_normal_pdf(x: float, y: float, sigma: Matrix2) -> float:
    """Centered bivariate normal density at (x, y) under covariance sigma."""
    if not sigma.is_pos_def():
        raise ParameterError("biv_normal_pdf: sigma must be positive-definite")
    q = sigma.quad_form(x, y)
    return math.exp(-0.5 * q) / (_TWO_PI * math.sqrt(sigma.det))


def biv_survival(u: float, v: float, sigma: Matrix2) -> float:
    """Upper-orthant probability P{X > u, Y > v} for centered (X, Y) ~ sigma.

    Conditioning on X reduces the probability to a single integral of a
    normal survival function against the standard normal density:

        P = int_{u/s1}^{inf} phi(z) * Psi((v/s2 - r z) / sqrt(1 - r^2)) dz

    which adaptive quadrature evaluates to ~1e-11 absolute accuracy.
    """
    if not sigma.is_pos_def():
        raise ParameterError("biv_survival: sigma must be positive-definite")
    s1 = math.sqrt(sigma.m11)
    s2 = math.sqrt(sigma.m22)
    r = sigma.m12 / (s1 * s2)
    zu = u / s1
    zv = v / s2
    if r == 0.0:
        return norm_sf(zu) * norm_sf(zv)
    rc = math.sqrt((1.0 - r) * (1.0 + r))

    def integrand(z: float) -> float:
        return norm_pdf(z) * norm_sf((zv - r * z) / rc)

    lo = max(zu, -40.0)
    val, err = integrate.quad(
        integrand, lo, math.inf, epsabs=BIV_SURVIVAL_ABS_TOL * 0.1, epsrel=1e-12, limit=200
    )
    if err > BIV_SURVIVAL_ABS_TOL and err > 1e-8 * abs(val):
        raise NumericalError(
            f"biv_survival: quadrature error estimate {err:g} above target"
        )
    # Quadrature can undershoot 0 or overshoot 1 by roundoff only.
    return min(1.0, max(0.0, val))


def quad_form(s: float, t: float, rho: float, a: float) -> float:
    """Quadratic form (1, a) Sigma^{-1}_{s,t} (1, a)^T in closed form.

    This is the Gaussian energy whose minimum over the time square drives
    the exponential decay of the joint ruin probability.
    """
    if not (s > 0.0 and t > 0.0):
        raise ParameterError(f"quad_form: need s, t > 0, got ({s}, {t})")
    if not abs(rho) < 1.0:
        raise ParameterError(f"quad_form: need |rho| < 1, got {rho}")
    m = min(s, t)
    det = s * t - (rho * m) ** 2
    return (t - 2.0 * a * rho * m + a * a * s) / det


def level_weights(s: float, t: float, rho: float, a: float) -> tuple[float, float]:
    """Weight vector Sigma^{-1}_{s,t} (1, a)^T in closed form.

    Both components are strictly positive whenever a > max(0, rho) and
    s = t <= 1; they appear as the exponential rates of the prefactor
    integrals and in the variance-reduction representation of the joint
    exceedance event.
    """
    if not (s > 0.0 and t > 0.0):
        raise ParameterError(f"level_weights: need s, t > 0, got ({s}, {t})")
    if not abs(rho) < 1.0:
        raise ParameterError(f"level_weights: need |rho| < 1, got {rho}")
    m = min(s, t)
    det = s * t - (rho * m) ** 2
    return ((t - a * rho * m) / det, (a * s - rho * m) / det)
