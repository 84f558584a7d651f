"""Closed-form ruin formulas and the two-sided bounds for positive correlation.

Covers the single-portfolio finite-horizon ruin probability, the product
formula for uncorrelated portfolios, and the sandwich

    p_{u,v} <= pi <= A(c1, c2) * p_{u,v},      rho in (0, 1),

where ``p_{u,v}`` is the joint terminal survival probability and the
amplification constant ``A`` depends only on the drifts and correlation.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace

from .errors import ParameterError
from .gauss import biv_survival, brownian_cov, log_norm_cdf, norm_cdf, norm_sf


@dataclass(frozen=True)
class ModelParams:
    """Parameters of the correlated two-portfolio Brownian risk model.

    ``u`` and ``v`` are the initial capitals, ``c1``/``c2`` the premium
    rates, ``rho`` the correlation of the driving pair, and ``horizon`` the
    time window (default 1; other horizons reduce to 1 by Brownian
    self-similarity, see :meth:`rescaled`).
    """

    rho: float
    c1: float
    c2: float
    u: float
    v: float
    horizon: float = 1.0

    def __post_init__(self) -> None:
        if not abs(self.rho) < 1.0:
            raise ParameterError(f"ModelParams: need |rho| < 1, got {self.rho}")
        if not self.horizon > 0.0:
            raise ParameterError(f"ModelParams: need horizon > 0, got {self.horizon}")

    @classmethod
    def from_ratio(
        cls,
        rho: float,
        c1: float,
        c2: float,
        u: float,
        a: float,
        horizon: float = 1.0,
    ) -> "ModelParams":
        """Build params with the second capital given as a ratio, v = a * u."""
        if not u > 0.0:
            raise ParameterError("from_ratio: need u > 0 when v is given as a ratio")
        if not 0.0 < a <= 1.0:
            raise ParameterError(f"from_ratio: need a in (0, 1], got {a}")
        return cls(rho, c1, c2, u, a * u, horizon)

    @property
    def ratio(self) -> float:
        """Threshold ratio v / u (requires u > 0)."""
        if not self.u > 0.0:
            raise ParameterError("ratio: undefined for u <= 0")
        return self.v / self.u

    def rescaled(self) -> "ModelParams":
        """Equivalent parameters on horizon 1.

        Brownian self-similarity gives
        ``pi_T(c1, c2; u, v) = pi_1(c1 sqrt(T), c2 sqrt(T); u / sqrt(T), v / sqrt(T))``.
        """
        if self.horizon == 1.0:
            return self
        rt = math.sqrt(self.horizon)
        return replace(
            self,
            c1=self.c1 * rt,
            c2=self.c2 * rt,
            u=self.u / rt,
            v=self.v / rt,
            horizon=1.0,
        )


@dataclass(frozen=True)
class BoundsResult:
    """Sandwich bounds on the joint ruin probability."""

    lower: float
    upper: float
    amplification: float


def single_ruin(c: float, u: float, T: float = 1.0) -> float:
    """Ruin probability of one portfolio with premium rate c on [0, T].

    Closed form: ``Phi(-u/sqrt(T) - c sqrt(T)) + exp(-2cu) Phi(-u/sqrt(T) + c sqrt(T))``.
    The second term is evaluated as ``exp(-2cu + log Phi(...))`` so that the
    product of an extreme exponential with a tiny CDF never over/underflows.
    """
    if not u >= 0.0:
        raise ParameterError(f"single_ruin: need u >= 0, got {u}")
    if not T > 0.0:
        raise ParameterError(f"single_ruin: need T > 0, got {T}")
    rt = math.sqrt(T)
    first = norm_cdf(-u / rt - c * rt)
    second = math.exp(-2.0 * c * u + log_norm_cdf(-u / rt + c * rt))
    return min(1.0, first + second)


def independent_ruin(c1: float, c2: float, u: float, v: float) -> float:
    """Joint ruin probability at rho = 0: the product of two 1-D formulas."""
    return single_ruin(c1, u, 1.0) * single_ruin(c2, v, 1.0)


def amplification(rho: float, c1: float, c2: float) -> float:
    """Amplification constant A(c1, c2) of the upper bound for rho in (0, 1).

    ``1/A = Psi(max(0, (c2 - rho c1) / sqrt(1 - rho^2))) * Psi(max(0, c1))``;
    both survival factors are at most 1/2, so A >= 4, with equality exactly
    when both max arguments collapse to zero.
    """
    if not 0.0 < rho < 1.0:
        raise ParameterError(f"amplification: need rho in (0, 1), got {rho}")
    g1 = norm_sf(max(0.0, (c2 - rho * c1) / math.sqrt(1.0 - rho * rho)))
    g2 = norm_sf(max(0.0, c1))
    return 1.0 / (g1 * g2)


def ruin_bounds(params: ModelParams) -> BoundsResult:
    """Sandwich bounds on the joint ruin probability for rho in (0, 1).

    lower = P{W1(1) > u + c1, W2(1) > v + c2} under the horizon-1 coupling,
    upper = A(c1, c2) * lower.  Valid for all u, v >= 0; not valid for
    rho <= 0 (no bound is attempted there).
    """
    p = params.rescaled()
    if not 0.0 < p.rho < 1.0:
        raise ParameterError(f"ruin_bounds: need rho in (0, 1), got {p.rho}")
    if not (p.u >= 0.0 and p.v >= 0.0):
        raise ParameterError(f"ruin_bounds: need u, v >= 0, got ({p.u}, {p.v})")
    sigma = brownian_cov(1.0, 1.0, p.rho)
    lower = biv_survival(p.u + p.c1, p.v + p.c2, sigma)
    amp = amplification(p.rho, p.c1, p.c2)
    return BoundsResult(lower=lower, upper=amp * lower, amplification=amp)
