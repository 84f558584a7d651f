"""Acceptance suite: every criterion the package must satisfy, each as one
deterministic check with a pinned tolerance.

``run_checks(level="quick")`` covers the closed-form and identity criteria
(seconds); ``level="full"`` adds the Monte Carlo criteria.  All statistical
checks draw their configurations and their paths from seeds derived from the
one ``seed`` argument, and every Monte Carlo estimate is bit-identical for a
fixed seed regardless of worker count, so the rendered report is
byte-reproducible.

``mc_scale`` multiplies the Monte Carlo sample counts.  At 1.0 the sizes are
the acceptance sizes; below 1.0 the statistical windows widen accordingly
(checks stay valid, just less sharp).  Criteria whose tolerances are fixed
percentages rather than standard-error windows keep per-criterion sample
floors unless ``apply_floors=False``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy import integrate
from scipy.special import log_ndtr, logsumexp

from . import montecarlo as mc
from .asymptotics import (
    Regime,
    approximant,
    classify,
    critical_rho,
    crossing_exp_integral_limit,
    curvature_constant,
    gaussian_sum_limit,
    log_decay_rate,
    minimize_quad_form,
    t_star,
    taylor_coefficient_t,
)
from .exact import ModelParams, independent_ruin, ruin_bounds, single_ruin
from .gauss import norm_cdf


@dataclass(frozen=True)
class CheckResult:
    index: int
    name: str
    passed: bool
    measured: str


def _f(x: float) -> str:
    return f"{x:.10g}"


# ----------------------------------------------------------------------
# Closed-form / identity criteria (quick)
# ----------------------------------------------------------------------


def check_curvature_boundary_value() -> CheckResult:
    """Criterion 1: the a=1 boundary curvature constant equals 4/3."""
    tau3 = curvature_constant(Regime.FULL_DIM_III, -0.5, 1.0)
    tau2_form = curvature_constant(Regime.FULL_DIM_II, -0.5, 1.0)
    err = max(abs(tau3 - 4.0 / 3.0), abs(tau2_form - 4.0 / 3.0))
    return CheckResult(
        1,
        "curvature constant at (a=1, rho=-1/2) is 4/3",
        err <= 1e-12,
        f"max_abs_err={_f(err)} tol=1e-12",
    )


def check_critical_rho_at_one() -> CheckResult:
    """Criterion 2: critical correlation at a=1 is -1/2 (both forms)."""
    err = max(
        abs(critical_rho(1.0) + 0.5),
        abs(critical_rho(1.0, alt=True) + 0.5),
    )
    return CheckResult(
        2,
        "critical_rho(1) = -1/2",
        err <= 1e-12,
        f"max_abs_err={_f(err)} tol=1e-12",
    )


def check_critical_form_oracle(seed: int) -> CheckResult:
    """Criterion 3: the implemented critical-rho form is where t* crosses 1
    and where the transverse Taylor coefficient changes sign."""
    rng = np.random.Generator(np.random.PCG64(seed))
    eps = 1e-6
    n = 500
    failures = 0
    worst_tau = 0.0
    for _ in range(n):
        a = float(rng.uniform(0.01, 1.0))
        boundary = critical_rho(a)
        t_below = t_star(boundary - eps, a)
        t_above = t_star(boundary + eps, a)
        tau_below = taylor_coefficient_t(boundary - eps, a)
        tau_above = taylor_coefficient_t(boundary + eps, a)
        tau_at = abs(taylor_coefficient_t(boundary, a))
        worst_tau = max(worst_tau, tau_at)
        ok = (
            0.0 < t_below <= 1.0
            and (t_above > 1.0 or t_above < 0.0)
            and tau_below < 0.0 < tau_above
            and tau_at < 1e-6
        )
        failures += not ok
    return CheckResult(
        3,
        "t*-crossing and Taylor-sign oracle for critical_rho",
        failures == 0,
        f"draws={n} failures={failures} max_abs_tau_at_boundary={_f(worst_tau)}",
    )


def check_optimizer_vs_grid(seed: int) -> CheckResult:
    """Criterion 4: closed-form minimizer matches a 400x400 grid search."""
    rng = np.random.Generator(np.random.PCG64(seed))
    grid = np.linspace(1.0 / 400.0, 1.0, 400)
    spacing = grid[1] - grid[0]
    s_col = grid[:, None]
    t_row = grid[None, :]
    m = np.minimum(s_col, t_row)
    draws = [(-0.8, 1.0), (0.3, 0.9)]
    while len(draws) < 200:
        a = float(rng.uniform(0.05, 1.0))
        lo, hi = -0.95, min(a, 0.95) - 1e-3
        if hi <= lo:
            continue
        draws.append((float(rng.uniform(lo, hi)), a))
    worst_cell = 0.0
    worst_q = 0.0
    for rho, a in draws:
        q = (t_row - 2.0 * a * rho * m + a * a * s_col) / (
            s_col * t_row - (rho * m) ** 2
        )
        flat = int(np.argmin(q))
        gi, gj = divmod(flat, 400)
        gs, gt = float(grid[gi]), float(grid[gj])
        q_grid = float(q[gi, gj])
        opt = minimize_quad_form(rho, a)
        cell = min(
            max(abs(ps - gs), abs(pt - gt)) for ps, pt in opt.points
        ) / spacing
        worst_cell = max(worst_cell, cell)
        worst_q = max(worst_q, abs(q_grid - opt.q_min))
        if opt.q_min > q_grid + 1e-12:
            worst_cell = math.inf  # grid beat the closed form: impossible if correct
    passed = worst_cell <= 1.0 + 1e-9 and worst_q <= 1e-4
    return CheckResult(
        4,
        "closed-form optimizer vs 400x400 grid search",
        passed,
        f"draws=200 max_cell_dist={_f(worst_cell)} max_q_err={_f(worst_q)} tol=1e-4",
    )


def _log_single_ruin(b: float, x: float, horizon: float) -> float:
    """log of the 1-D crossing probability, stable for large x."""
    rt = math.sqrt(horizon)
    t1 = log_ndtr(-x / rt - b * rt)
    t2 = -2.0 * b * x + log_ndtr(-x / rt + b * rt)
    return float(logsumexp([t1, t2]))


def check_crossing_integral_limits() -> CheckResult:
    """Criterion 8: quadrature of the truncated exponentially weighted
    crossing integrals against the closed-form limits."""

    def weighted(b: float, c: float, horizon: float, x: float) -> float:
        return math.exp(min(0.0, _log_single_ruin(b, x, horizon)) + c * x)

    one_sided = 1.0 + integrate.quad(
        lambda x: weighted(1.0, 1.0, 50.0, x), 0.0, np.inf, limit=400
    )[0]
    err_one = abs(one_sided - crossing_exp_integral_limit(1.0, 1.0, "one_sided"))

    delta = 200.0
    tail = integrate.quad(
        lambda x: weighted(1.0, 2.0, delta, x), 0.0, np.inf, limit=800
    )[0]
    normalized = (0.5 + tail) / delta
    err_norm = abs(normalized - crossing_exp_integral_limit(1.0, None, "normalized"))

    passed = err_one <= 1e-3 and err_norm <= 2e-2
    return CheckResult(
        8,
        "exponentially weighted crossing integrals vs limits",
        passed,
        f"one_sided_err={_f(err_one)} (tol=1e-3) normalized_err={_f(err_norm)} (tol=2e-2)",
    )


def check_gaussian_sum_limits() -> CheckResult:
    """Criterion 9: brute-force discretized Gaussian sums vs closed forms."""
    u = 1.0e4
    delta = 1.0
    n_terms = int(u * math.log(u))
    worst = 0.0
    for c1, c2 in ((1.0, 0.0), (2.0, 1.0), (1.0, -1.0)):
        for variant, lo in (("one_sided", 1), ("two_sided", -n_terms)):
            ls = np.arange(lo, n_terms + 1, dtype=np.float64)
            x = (ls - 1.0) * delta / u
            s = float(
                (math.sqrt(c1) * delta / u)
                * np.exp(c2 * x - 0.5 * c1 * x * x).sum()
            )
            ref = gaussian_sum_limit(c1, c2, variant)
            worst = max(worst, abs(s - ref) / ref)
    return CheckResult(
        9,
        "discretized Gaussian sums vs closed-form limits",
        worst <= 1e-2,
        f"max_rel_err={_f(worst)} tol=1e-2",
    )


# ----------------------------------------------------------------------
# Monte Carlo criteria (full)
# ----------------------------------------------------------------------


def _scaled(base: int, mc_scale: float, floor: int, apply_floors: bool) -> int:
    n = int(round(base * mc_scale))
    return max(n, floor) if apply_floors else max(n, 50)


def check_sandwich_bounds(
    seed: int, mc_scale: float, apply_floors: bool = True, workers: int | None = None
) -> CheckResult:
    """Criterion 5: crude Monte Carlo lies inside the two-sided bounds."""
    rng = np.random.Generator(np.random.PCG64(seed + 5))
    n_paths = _scaled(1_000_000, mc_scale, 20_000, apply_floors)
    worst = math.inf
    for i in range(20):
        rho = (0.2, 0.5, 0.8)[i % 3]
        u = float(rng.uniform(0.5, 2.5))
        v = float(rng.uniform(0.5, 2.5))
        params = ModelParams(rho, 0.0, 0.0, u, v)
        bounds = ruin_bounds(params)
        cfg = mc.MCConfig(n_samples=n_paths, grid_points=2**14, seed=seed * 1000 + i)
        est = mc.mc_ruin(params, cfg, workers=workers)
        slack = 3.0 * est.std_error
        margin = min(est.mean - (bounds.lower - slack), (bounds.upper + slack) - est.mean)
        worst = min(worst, margin)
        if margin < 0.0:
            break
    return CheckResult(
        5,
        "bounds sandwich crude Monte Carlo (20 configs)",
        worst >= 0.0,
        f"paths={n_paths} grid=16384 min_margin={_f(worst)}",
    )


def check_independent_factorization(
    seed: int, mc_scale: float, apply_floors: bool = True, workers: int | None = None
) -> CheckResult:
    """Criterion 6: at rho=0 the Monte Carlo estimate matches the product
    formula within 3 standard errors."""
    rng = np.random.Generator(np.random.PCG64(seed + 6))
    n_paths = _scaled(20_000, mc_scale, 2_000, apply_floors)
    configs = [(0.0, 0.0, 1.0, 1.0)]
    for _ in range(2):
        configs.append(
            (
                float(rng.uniform(0.0, 0.8)),
                float(rng.uniform(0.0, 0.8)),
                float(rng.uniform(0.8, 1.5)),
                float(rng.uniform(0.8, 1.5)),
            )
        )
    worst = math.inf
    target0 = (2.0 * norm_cdf(-1.0)) ** 2
    for j, (c1, c2, u, v) in enumerate(configs):
        exact = independent_ruin(c1, c2, u, v)
        params = ModelParams(0.0, c1, c2, u, v)
        cfg = mc.MCConfig(n_samples=n_paths, grid_points=2**15, seed=seed * 1000 + 60 + j)
        est = mc.mc_ruin(params, cfg, workers=workers)
        margin = 3.0 * est.std_error - abs(est.mean - exact)
        worst = min(worst, margin)
    return CheckResult(
        6,
        "rho=0 factorization vs Monte Carlo (3 configs)",
        worst >= 0.0,
        f"paths={n_paths} grid=32768 min_margin={_f(worst)} target0={_f(target0)}",
    )


def check_one_dimensional_exactness(
    seed: int, mc_scale: float, apply_floors: bool = True, workers: int | None = None
) -> CheckResult:
    """Criterion 7: with the second condition vacuous, Monte Carlo matches
    the 1-D closed form within 3 SE and within 2% relative after grid
    doubling (grids 4096, 8192, 16384 on common random numbers)."""
    c1, u = 0.25, 0.5
    exact = single_ruin(c1, u, 1.0)
    n_paths = _scaled(44_000, mc_scale, 44_000, apply_floors)
    params = ModelParams(0.3, c1, 0.0, u, -1.0)
    cfg = mc.MCConfig(n_samples=n_paths, grid_points=2**14, seed=seed * 1000 + 7)
    fine, mid, coarse = mc.mc_ruin_resolution_study(params, cfg, levels=3, workers=workers)
    monotone = coarse.mean <= mid.mean <= fine.mean
    abs_err = abs(fine.mean - exact)
    se_ok = abs_err <= 3.0 * fine.std_error
    rel = abs_err / exact
    passed = monotone and se_ok and rel <= 0.02
    return CheckResult(
        7,
        "1-D exactness with grid-doubling study",
        passed,
        f"paths={n_paths} exact={_f(exact)} mc_4096={_f(coarse.mean)} "
        f"mc_8192={_f(mid.mean)} mc_16384={_f(fine.mean)} rel_err={_f(rel)} "
        f"(tol=0.02) abs_err_over_se={_f(abs_err / max(fine.std_error, 1e-300))} (tol=3)",
    )


def check_pickands_constant(
    seed: int, mc_scale: float, apply_floors: bool = True, workers: int | None = None
) -> CheckResult:
    """Criterion 10: the estimated joint-exceedance constant matches the
    independence factorization at rho=0 and grows with the horizon."""
    n_head = _scaled(100_000, mc_scale, 40_000, apply_floors)
    n_mono = _scaled(100_000, mc_scale, 10_000, apply_floors)
    cfg_a1 = mc.MCConfig(n_samples=n_head, grid_points=4096, seed=seed * 1000 + 10)
    est_a1 = mc.estimate_pickands_constant(0.0, 1.0, 8.0, cfg_a1, workers=workers)
    # The a=0.5 factor converges in the horizon at rate set by the smaller
    # drift: at delta=8 truncation alone leaves the exact value 8.1% below
    # the limit (quadrature), so this clause runs at delta=16 with a finer
    # step to keep the estimate inside the 10% band for the right reason.
    cfg_a05 = mc.MCConfig(n_samples=n_head, grid_points=16_384, seed=seed * 1000 + 10)
    est_a05 = mc.estimate_pickands_constant(0.0, 0.5, 16.0, cfg_a05, workers=workers)
    rel1 = abs(est_a1.mean - 4.0) / 4.0
    rel05 = abs(est_a05.mean - 8.0) / 8.0
    # Horizon coupling: equal step, seed, chunking -> pathwise monotone.
    mono_vals = []
    for delta, grid in ((2.0, 4096), (4.0, 8192), (8.0, 16384)):
        cfg = mc.MCConfig(n_samples=n_mono, grid_points=grid, seed=seed * 1000 + 11)
        mono_vals.append(
            mc.estimate_pickands_constant(0.0, 1.0, delta, cfg, workers=workers).mean
        )
    monotone = mono_vals[0] <= mono_vals[1] <= mono_vals[2]
    passed = rel1 <= 0.10 and rel05 <= 0.10 and monotone
    return CheckResult(
        10,
        "joint-exceedance constant: rho=0 targets and horizon growth",
        passed,
        f"paths={n_head} est_a1={_f(est_a1.mean)} (target 4) est_a05={_f(est_a05.mean)}"
        f" (target 8, tol=10%) monotone_deltas={_f(mono_vals[0])},{_f(mono_vals[1])},"
        f"{_f(mono_vals[2])}",
    )


def check_regime_iv_trend(
    seed: int, mc_scale: float, apply_floors: bool = True, workers: int | None = None
) -> CheckResult:
    """Criterion 11: importance-sampled estimates over the regime-IV
    approximant trend toward 1 as u grows.

    Grids scale faster than u^2 so the (downward) discretization bias decays
    along the sequence instead of masking the convergence.  The final-ratio
    tolerance is hard; the monotone-gap comparison allows the estimates'
    own propagated standard errors (the estimator is unbiased but not
    noise-free, and the criterion fixes no sample size)."""
    rho, a, c = -0.9, 0.5, 0.5
    n_paths = _scaled(50_000, mc_scale, 20_000, apply_floors)
    ratios = []
    rel_ses = []
    for j, (u, grid) in enumerate(((3.0, 2**15), (4.0, 2**16), (5.0, 2**17))):
        params = ModelParams.from_ratio(rho, c, c, u, a)
        approx = approximant(params)
        cfg = mc.MCConfig(n_samples=n_paths, grid_points=grid, seed=seed * 1000 + 110 + j)
        est = mc.mc_ruin_importance(params, cfg, workers=workers)
        ratios.append(est.mean / approx.value)
        rel_ses.append(est.std_error / est.mean)
    gaps = [abs(r - 1.0) for r in ratios]
    slack01 = 2.0 * math.hypot(ratios[0] * rel_ses[0], ratios[1] * rel_ses[1])
    slack12 = 2.0 * math.hypot(ratios[1] * rel_ses[1], ratios[2] * rel_ses[2])
    passed = (
        gaps[-1] <= 0.25
        and gaps[1] <= gaps[0] + slack01
        and gaps[2] <= gaps[1] + slack12
    )
    return CheckResult(
        11,
        "regime-IV ratio MC/asymptotic trends to 1 (u=3,4,5)",
        passed,
        f"paths={n_paths} ratios={_f(ratios[0])},{_f(ratios[1])},{_f(ratios[2])} "
        f"final_gap={_f(gaps[-1])} (tol=0.25) gap_slacks={_f(slack01)},{_f(slack12)}",
    )


def check_log_asymptotics(
    seed: int, mc_scale: float, apply_floors: bool = True, workers: int | None = None
) -> CheckResult:
    """Criterion 12: -2 log(pi_hat)/u^2 approximates the decay exponent in
    one regime-I and one regime-IV configuration."""
    n_paths = _scaled(50_000, mc_scale, 4_000, apply_floors)
    worst = 0.0
    parts = []
    for j, (rho, a) in enumerate(((-0.4, 1.0), (-0.9, 0.5))):
        u = 5.0
        q_star = 2.0 * log_decay_rate(rho, a)
        params = ModelParams.from_ratio(rho, 0.0, 0.0, u, a)
        cfg = mc.MCConfig(n_samples=n_paths, grid_points=2**16, seed=seed * 1000 + 120 + j)
        est = mc.mc_ruin_importance(params, cfg, workers=workers)
        q_hat = -2.0 * math.log(est.mean) / (u * u)
        rel = abs(q_hat / q_star - 1.0)
        worst = max(worst, rel)
        parts.append(f"regime{('I', 'IV')[j]}: q_hat={_f(q_hat)} q*={_f(q_star)}")
    return CheckResult(
        12,
        "log-asymptotics of the decay rate at u=5 (regimes I, IV)",
        worst <= 0.15,
        f"paths={n_paths} {'; '.join(parts)} max_rel_err={_f(worst)} (tol=0.15)",
    )


def check_worker_invariance(
    seed: int, mc_scale: float, apply_floors: bool = True, workers: int | None = None
) -> CheckResult:
    """Criterion 13 (spot check): one estimator re-run under 1 and 4 workers
    must be bit-identical.  The full byte-identity of this report across
    worker counts is exercised by the test suite, which renders it twice
    under several RUIN_THREADS settings."""
    params = ModelParams(0.5, 0.3, 0.1, 1.0, 0.8)
    cfg = mc.MCConfig(n_samples=8_192, grid_points=2**12, seed=seed * 1000 + 13)
    est1 = mc.mc_ruin(params, cfg, workers=1)
    est4 = mc.mc_ruin(params, cfg, workers=4)
    same = est1.mean == est4.mean and est1.std_error == est4.std_error
    return CheckResult(
        13,
        "determinism: estimate invariant under worker count",
        same,
        f"mean_w1={est1.mean!r} mean_w4={est4.mean!r}",
    )


# ----------------------------------------------------------------------
# Suite driver
# ----------------------------------------------------------------------


def run_checks(
    level: str = "quick",
    seed: int = 1,
    mc_scale: float = 1.0,
    apply_floors: bool = True,
    workers: int | None = None,
) -> list[CheckResult]:
    """Run the acceptance checks and return one result per criterion."""
    if level not in ("quick", "full"):
        raise ValueError(f"unknown level {level!r}")
    if not mc_scale > 0.0:
        raise ValueError(f"mc_scale must be positive, got {mc_scale}")
    results = [
        check_curvature_boundary_value(),
        check_critical_rho_at_one(),
        check_critical_form_oracle(seed),
        check_optimizer_vs_grid(seed),
        check_crossing_integral_limits(),
        check_gaussian_sum_limits(),
    ]
    if level == "full":
        results.extend(
            [
                check_sandwich_bounds(seed, mc_scale, apply_floors, workers),
                check_independent_factorization(seed, mc_scale, apply_floors, workers),
                check_one_dimensional_exactness(seed, mc_scale, apply_floors, workers),
                check_pickands_constant(seed, mc_scale, apply_floors, workers),
                check_regime_iv_trend(seed, mc_scale, apply_floors, workers),
                check_log_asymptotics(seed, mc_scale, apply_floors, workers),
                check_worker_invariance(seed, mc_scale, apply_floors, workers),
            ]
        )
    return sorted(results, key=lambda r: r.index)


def format_report(
    results: list[CheckResult], level: str, seed: int, mc_scale: float
) -> str:
    lines = [
        f"ruin2d acceptance report: level={level} seed={seed} mc_scale={mc_scale:g}",
    ]
    for r in results:
        status = "PASS" if r.passed else "FAIL"
        lines.append(f"criterion {r.index:02d} {status} {r.name} :: {r.measured}")
    n_pass = sum(r.passed for r in results)
    lines.append(f"RESULT: {'PASS' if n_pass == len(results) else 'FAIL'} "
                 f"({n_pass}/{len(results)} criteria)")
    return "\n".join(lines) + "\n"
