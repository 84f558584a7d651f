"""Monte Carlo engine: coupled Brownian paths, ruin estimators, and the
simulation-estimated joint-exceedance constant.

Performance and reproducibility contract
----------------------------------------
Work is split into chunks of paths.  Each chunk draws from its own
counter-based Philox stream keyed by ``(seed, chunk_index)``, so results are
bit-identical for a fixed :class:`MCConfig` regardless of how many worker
processes execute the chunks.  Per-chunk sufficient statistics (float64 sums
of the estimator values and their squares) are merged in chunk order with
exact summation.  ``RUIN_THREADS`` caps worker parallelism; unset means the
hardware count.

Paths are generated blockwise in time (increments in time order), so path
arrays never materialize whole: memory stays bounded by
``chunk_size * block`` regardless of grid size.  Time-ordered generation also
means that for a fixed step size, seed, and chunk size, a run on a longer
horizon extends the *same* paths -- the coupling used by the horizon
monotonicity checks of the constant estimator.  Resolution studies instead
couple through :func:`mc_ruin_resolution_study`, which evaluates suprema on
dyadically coarsened subgrids of one set of paths.

Grid suprema only see the path at grid points, so crude estimates are biased
low relative to the continuous-time probability; the bias shrinks like the
square root of the step and is controlled by resolution doubling.

Importance sampling
-------------------
Paths are drawn with deterministic piecewise-linear added drift and each
indicator is weighted by the Girsanov likelihood ratio, evaluated in log
space from the realized driver values at a small set of checkpoint times.
A constant user tilt (``MCConfig.tilt``) drifts both coordinates over the
whole horizon.

The automatically derived sampler stratifies chunks over a bank of
minimum-energy tilts indexed by candidate exceedance times ``t_l`` of the
second coordinate (spanning the crossing window around the optimizer) and
weights each path against the whole mixture.  Component ``l`` drives the
mean path to the ruin level of coordinate 1 just before the horizon and to
the ruin level of coordinate 2 at ``t_l``, then stops (drift rates are the
inverse-covariance weights of the two target levels -- the cheapest drift
with those means).  Its Girsanov exponent reads the drivers only at the two
target times, so the weight of a path is controlled by the component
matching its realized crossing location; neither the tangential spread of
the second crossing nor the diffusion after either crossing can blow the
weights up, which is exactly what a single fixed tilt gets wrong for these
sup-functional events.
"""

from __future__ import annotations

import math
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass

import numpy as np

from . import asymptotics
from .errors import ParameterError
from .exact import ModelParams
from .gauss import quad_form

ENV_THREADS = "RUIN_THREADS"

_BLOCK_COLS = 1024

#: cap on the number of mixture components of the auto-derived sampler
_MIX_MAX_COMPONENTS = 768
#: half-width of the exceedance-time bank, in crossing-window deviations
_MIX_SPREAD = 3.5


@dataclass(frozen=True)
class MCConfig:
    """Simulation configuration.

    ``grid_points`` is the number of time steps (the path has
    ``grid_points + 1`` grid values including time 0); powers of two are
    recommended and required by the resolution study.  ``tilt``, when set, is
    a constant added drift pair (mu1, mu2) in portfolio coordinates for the
    importance sampler.  ``dtype`` controls path arithmetic ("float32"
    default, "float64" available); estimator reductions are always float64.
    """

    n_samples: int = 100_000
    grid_points: int = 16_384
    seed: int = 0
    tilt: tuple[float, float] | None = None
    chunk_size: int = 4096
    dtype: str = "float32"

    def __post_init__(self) -> None:
        if self.n_samples < 1:
            raise ParameterError(f"MCConfig: need n_samples >= 1, got {self.n_samples}")
        if self.grid_points < 2:
            raise ParameterError(f"MCConfig: need grid_points >= 2, got {self.grid_points}")
        if self.chunk_size < 1:
            raise ParameterError(f"MCConfig: need chunk_size >= 1, got {self.chunk_size}")
        if self.dtype not in ("float32", "float64"):
            raise ParameterError(f"MCConfig: dtype must be float32|float64, got {self.dtype}")


@dataclass(frozen=True)
class MCEstimate:
    """Point estimate with its sampling error."""

    mean: float
    std_error: float
    n_samples: int
    ci95: tuple[float, float]


@dataclass(frozen=True)
class PathGrid:
    """One sampled coupled path on a uniform grid."""

    times: np.ndarray
    w1: np.ndarray
    w2: np.ndarray


@dataclass(frozen=True)
class TiltSpec:
    """Piecewise-constant added drift in portfolio coordinates.

    ``rates_before`` applies on [0, switch_time], ``rates_after`` on the
    remainder of the horizon.  A constant tilt has ``switch_time`` equal to
    the horizon.
    """

    switch_time: float
    rates_before: tuple[float, float]
    rates_after: tuple[float, float] = (0.0, 0.0)


def resolve_workers(workers: int | None = None) -> int:
    """Worker process count: explicit argument, else RUIN_THREADS, else CPUs."""
    if workers is not None:
        if workers < 1:
            raise ParameterError(f"need workers >= 1, got {workers}")
        return workers
    env = os.environ.get(ENV_THREADS)
    if env is not None:
        try:
            n = int(env)
        except ValueError:
            raise ParameterError(f"{ENV_THREADS} must be a positive integer, got {env!r}")
        if n < 1:
            raise ParameterError(f"{ENV_THREADS} must be a positive integer, got {env!r}")
        return n
    return os.cpu_count() or 1


def _chunk_rng(seed: int, chunk_index: int) -> np.random.Generator:
    key = np.array([seed & 0xFFFFFFFFFFFFFFFF, chunk_index], dtype=np.uint64)
    return np.random.Generator(np.random.Philox(key=key))


# ----------------------------------------------------------------------
# Generation plans and mixture components (internal wire format)
# ----------------------------------------------------------------------
# A generation plan describes one chunk's deterministic added drift as a
# piecewise-linear function of time via knots and accumulated values:
#   plan = (knots, w1_vals, w2_vals, th1_vals, th2_vals)
# where w*_vals include the premium subtraction (used for the suprema) and
# th*_vals are the accumulated *driver* tilts (used to reconstruct realized
# driver values for likelihood ratios).
#
# A mixture component is (share, energy, terms) with terms a tuple of
# (driver, checkpoint_step, coefficient): its Girsanov exponent on a path is
# sum(coeff * tilted_driver[driver](checkpoint)) - energy.


def _plain_plan(horizon: float, c1: float, c2: float):
    knots = (0.0, horizon)
    return (
        knots,
        (0.0, -c1 * horizon),
        (0.0, -c2 * horizon),
        (0.0, 0.0),
        (0.0, 0.0),
    )


def _path_suprema(
    rng: np.random.Generator,
    n_paths: int,
    n_steps: int,
    horizon: float,
    rho: float,
    plan,
    dtype: np.dtype,
    n_levels: int,
    checkpoints: tuple[int, ...] = (),
):
    """Simulate one chunk blockwise; return suprema and driver checkpoints.

    ``plan`` is a single generation plan, or ``(plan_table, cum_quota,
    offset)`` to stratify paths over a bank of plans: global path index
    ``g = offset + p`` uses the component whose quota interval contains
    ``g`` (``cum_quota`` holds the cumulative path counts).  Returns
    per-level grid suprema of the two drifted coordinates, the terminal
    standard-driver values, and ``{step: (B1, B2)}`` for each requested
    checkpoint step (pre-drift standard driver values).
    """
    if isinstance(plan, tuple) and len(plan) == 3 and isinstance(plan[0], list):
        table, cum, offset = plan
        comp_ids = np.searchsorted(np.asarray(cum), offset + np.arange(n_paths), side="right") - 1
    else:
        table, comp_ids = [plan], None
    h = horizon / n_steps
    sqh = np.asarray(math.sqrt(h), dtype=dtype)
    r = np.asarray(rho, dtype=dtype)
    rc = np.asarray(math.sqrt(1.0 - rho * rho), dtype=dtype)
    sup1 = np.zeros((n_levels, n_paths), dtype=dtype)
    sup2 = np.zeros((n_levels, n_paths), dtype=dtype)
    carry1 = np.zeros(n_paths, dtype=dtype)
    carry2 = np.zeros(n_paths, dtype=dtype)
    saved: dict[int, tuple] = {}
    k0 = 0
    while k0 < n_steps:
        nb = min(_BLOCK_COLS, n_steps - k0)
        z1 = rng.standard_normal((n_paths, nb), dtype=dtype)
        z2 = rng.standard_normal((n_paths, nb), dtype=dtype)
        np.cumsum(z1, axis=1, out=z1)
        np.cumsum(z2, axis=1, out=z2)
        z1 *= sqh
        z2 *= sqh
        z1 += carry1[:, None]
        z2 += carry2[:, None]
        carry1 = z1[:, -1].copy()
        carry2 = z2[:, -1].copy()
        # z1/z2 now hold the driver values B1/B2 on this block.
        for k in checkpoints:
            if k0 < k <= k0 + nb:
                col = k - k0 - 1
                saved[k] = (z1[:, col].copy(), z2[:, col].copy())
        t_block = np.arange(k0 + 1, k0 + nb + 1, dtype=np.float64) * h
        rows1 = np.stack([
            np.interp(t_block, p[0], p[1]).astype(dtype) for p in table
        ])
        rows2 = np.stack([
            np.interp(t_block, p[0], p[2]).astype(dtype) for p in table
        ])
        if comp_ids is None:
            drift1, drift2 = rows1[0], rows2[0]
        else:
            drift1, drift2 = rows1[comp_ids], rows2[comp_ids]
        z2 *= rc
        z2 += r * z1
        z2 += drift2
        z1 += drift1
        for j in range(n_levels):
            stride = 1 << j
            first = (-(k0 + 1)) % stride
            if first < nb:
                np.maximum(sup1[j], z1[:, first::stride].max(axis=1), out=sup1[j])
                np.maximum(sup2[j], z2[:, first::stride].max(axis=1), out=sup2[j])
        k0 += nb
    return sup1, sup2, carry1, carry2, saved


def _mixture_log_density(
    components: tuple,
    saved: dict[int, tuple],
    horizon: float,
    h: float,
    plan: tuple,
) -> np.ndarray:
    """Per-path log density ratio of the sampling mixture against the
    untilted law, evaluated on the realized (tilted) driver paths.

    The kernel stores pre-drift standard driver values, so the generation
    plan's accumulated driver tilt is added back at each checkpoint.
    """
    if isinstance(plan, tuple) and len(plan) == 3 and isinstance(plan[0], list):
        table, cum, offset = plan
        n_paths = len(next(iter(saved.values()))[0]) if saved else 0
        comp_ids = np.searchsorted(np.asarray(cum), offset + np.arange(n_paths), side="right") - 1
    else:
        table, comp_ids = [plan], None
    tilted: dict[int, tuple[np.ndarray, np.ndarray]] = {}
    for k, (b1, b2) in saved.items():
        t_k = k * h
        th1 = np.array([float(np.interp(t_k, p[0], p[3])) for p in table])
        th2 = np.array([float(np.interp(t_k, p[0], p[4])) for p in table])
        if comp_ids is None:
            add1, add2 = th1[0], th2[0]
        else:
            add1, add2 = th1[comp_ids], th2[comp_ids]
        tilted[k] = (
            b1.astype(np.float64) + add1,
            b2.astype(np.float64) + add2,
        )
    etas = []
    for share, energy, terms in components:
        eta = None
        for driver, k, coeff in terms:
            val = coeff * tilted[k][driver]
            eta = val if eta is None else eta + val
        eta = eta - energy
        etas.append((share, eta))
    peak = etas[0][1] if len(etas) == 1 else np.maximum.reduce([e for _, e in etas])
    acc = np.zeros_like(peak)
    for share, eta in etas:
        acc += share * np.exp(eta - peak)
    return peak + np.log(acc)


def _chunk_worker(args: tuple) -> tuple[int, tuple[tuple[float, float], ...]]:
    """Run one chunk and reduce it to per-level float64 (sum, sum of squares)."""
    (
        mode,
        seed,
        chunk_index,
        n_paths,
        n_steps,
        horizon,
        rho,
        plan,
        components,
        n_levels,
        dtype_name,
        extra,
    ) = args
    rng = _chunk_rng(seed, chunk_index)
    dtype = np.dtype(dtype_name)
    checkpoints = tuple(
        sorted({k for _, _, terms in components for _, k, _ in terms})
    )
    sup1, sup2, b1_end, b2_end, saved = _path_suprema(
        rng, n_paths, n_steps, horizon, rho, plan, dtype, n_levels, checkpoints
    )
    stats: list[tuple[float, float]] = []
    if mode == "ruin":
        u, v = extra
        if not components:
            for j in range(n_levels):
                hits = float(np.count_nonzero((sup1[j] > u) & (sup2[j] > v)))
                stats.append((hits, hits))
        else:
            log_q = _mixture_log_density(
                components, saved, horizon, horizon / n_steps, plan
            )
            w = np.exp(-log_q)
            for j in range(n_levels):
                vals = np.where((sup1[j] > u) & (sup2[j] > v), w, 0.0)
                stats.append((float(vals.sum()), float((vals * vals).sum())))
    elif mode == "exp":
        lam1, lam2 = extra
        vals = np.exp(
            lam1 * sup1[0].astype(np.float64) + lam2 * sup2[0].astype(np.float64)
        ) / (lam1 * lam2)
        stats.append((float(vals.sum()), float((vals * vals).sum())))
    else:  # pragma: no cover - internal misuse
        raise ParameterError(f"unknown chunk mode {mode!r}")
    return n_paths, tuple(stats)


def _run_chunks(
    mode: str,
    cfg: MCConfig,
    n_steps: int,
    horizon: float,
    rho: float,
    plans,
    components: tuple,
    n_levels: int,
    extra: tuple,
    workers: int | None,
) -> list[MCEstimate]:
    """Dispatch chunks and merge their sufficient statistics.

    ``plans`` is either a single generation plan shared by all chunks or a
    list with one plan per chunk (stratified mixtures).  The merge runs in
    chunk order, so the output is independent of the worker count.
    """
    n = cfg.n_samples
    sizes = [cfg.chunk_size] * (n // cfg.chunk_size)
    if n % cfg.chunk_size:
        sizes.append(n % cfg.chunk_size)
    per_chunk = isinstance(plans, list)
    tasks = [
        (mode, cfg.seed, i, sz, n_steps, horizon, rho,
         plans[i] if per_chunk else plans, components, n_levels, cfg.dtype, extra)
        for i, sz in enumerate(sizes)
    ]
    n_workers = min(resolve_workers(workers), len(tasks))
    if n_workers <= 1:
        results = [_chunk_worker(t) for t in tasks]
    else:
        with ProcessPoolExecutor(max_workers=n_workers) as pool:
            results = list(
                pool.map(_chunk_worker, tasks, chunksize=max(1, len(tasks) // (4 * n_workers)))
            )
    total = sum(r[0] for r in results)
    out = []
    for j in range(n_levels):
        s1 = math.fsum(r[1][j][0] for r in results)
        s2 = math.fsum(r[1][j][1] for r in results)
        mean = s1 / total
        if total > 1:
            var = max(0.0, (s2 / total - mean * mean) * total / (total - 1))
            se = math.sqrt(var / total)
        else:
            se = 0.0
        out.append(MCEstimate(mean, se, total, (mean - 1.96 * se, mean + 1.96 * se)))
    return out


def _chunk_sizes(cfg: MCConfig) -> list[int]:
    sizes = [cfg.chunk_size] * (cfg.n_samples // cfg.chunk_size)
    if cfg.n_samples % cfg.chunk_size:
        sizes.append(cfg.n_samples % cfg.chunk_size)
    return sizes


def mc_ruin(
    params: ModelParams, cfg: MCConfig, workers: int | None = None
) -> MCEstimate:
    """Crude Monte Carlo estimate of the joint ruin probability on the grid.

    Averages the indicator that both drifted coordinates exceed their
    capital somewhere on the grid; the standard error is binomial.  The grid
    supremum under-samples the continuous one, so the estimate is biased low;
    control the bias with a resolution study (see
    :func:`mc_ruin_resolution_study`).
    """
    if cfg.tilt is not None and cfg.tilt != (0.0, 0.0):
        raise ParameterError("mc_ruin: cfg.tilt must be absent (use mc_ruin_importance)")
    plan = _plain_plan(params.horizon, params.c1, params.c2)
    return _run_chunks(
        "ruin", cfg, cfg.grid_points, params.horizon, params.rho,
        plan, (), 1, (params.u, params.v), workers,
    )[0]


def mc_ruin_resolution_study(
    params: ModelParams, cfg: MCConfig, levels: int, workers: int | None = None
) -> list[MCEstimate]:
    """Estimates on dyadically coarsened grids of the same paths.

    Entry ``j`` uses every ``2**j``-th grid point (grid ``grid_points / 2**j``),
    so entry 0 is the full-resolution estimate and the sequence is
    non-increasing in ``j`` path by path: exactly the common-random-numbers
    coupling a grid-doubling bias study needs.
    """
    if levels < 1:
        raise ParameterError(f"need levels >= 1, got {levels}")
    if cfg.grid_points % (1 << (levels - 1)):
        raise ParameterError(
            f"grid_points={cfg.grid_points} not divisible by 2**{levels - 1}"
        )
    if cfg.tilt is not None and cfg.tilt != (0.0, 0.0):
        raise ParameterError("resolution study runs untilted")
    plan = _plain_plan(params.horizon, params.c1, params.c2)
    return _run_chunks(
        "ruin", cfg, cfg.grid_points, params.horizon, params.rho,
        plan, (), levels, (params.u, params.v), workers,
    )


def derive_tilt(params: ModelParams) -> TiltSpec:
    """Minimum-energy tilt steering the mean path into the ruin event.

    The drift makes the tilted mean path reach ``u + c1`` at the horizon and
    ``v + c2 t*`` at the optimizer time ``t*`` of the quadratic form while
    spending the least possible change-of-measure cost.  Requires u, v > 0
    and full-dimensional parameters (the optimizer must exist).  This is the
    center of the component bank the auto-tilted estimator stratifies over.
    """
    p = params.rescaled()
    if not (p.u > 0.0 and p.v > 0.0):
        raise ParameterError("derive_tilt: need u, v > 0")
    a = p.ratio
    if not 0.0 < a <= 1.0:
        raise ParameterError(f"derive_tilt: need v/u in (0, 1], got {a}")
    opt = asymptotics.minimize_quad_form(p.rho, a)  # raises outside its domain
    _, ts = opt.points[0]
    rho = p.rho
    u_level = p.u + p.c1
    v_level = p.v + p.c2 * ts
    det = ts - (rho * ts) ** 2
    mu1 = (ts * u_level - rho * ts * v_level) / det
    mu2 = (v_level - rho * ts * u_level) / det
    rt = math.sqrt(params.horizon)
    return TiltSpec(
        switch_time=ts * params.horizon,
        rates_before=((mu1 + mu2 * rho) / rt, (rho * mu1 + mu2) / rt),
        rates_after=(mu1 / rt, rho * mu1 / rt),
    )


def _auto_mixture(p: ModelParams, cfg: MCConfig, max_components: int):
    """Bank of minimum-energy tilts over candidate exceedance times.

    Each component aims the mean path at the coordinate-1 ruin level at a
    time ``s0`` just before the horizon and at the coordinate-2 ruin level at
    a bank time ``t_l`` spanning the crossing window around the optimizer,
    with no drift after the targets.  Returns ``(plans, components)`` for the
    rescaled (unit-horizon) model.
    """
    rho = p.rho
    a = p.ratio
    opt = asymptotics.minimize_quad_form(rho, a)
    _, ts = opt.points[0]
    n = cfg.grid_points
    h = 1.0 / n

    def level1(s: float) -> float:
        return p.u + p.c1 * s

    def level2(t: float) -> float:
        return p.v + p.c2 * t

    def solve_mu(s: float, t: float) -> tuple[float, float]:
        m = min(s, t)
        det = s * t - (rho * m) ** 2
        l1, l2 = level1(s), level2(t)
        return (
            (t * l1 - rho * m * l2) / det,
            (s * l2 - rho * m * l1) / det,
        )

    # center rates set the geometry of the bank
    mu1_c, mu2_c = solve_mu(1.0, ts)
    # coordinate-1 targets sit slightly inside the horizon (the weight must
    # not read the freely diffusing endpoint) and get their own small bank:
    # the crossing location spreads over ~1/rate^2 and the weight exponent is
    # only stable within that resolution
    kappa1 = max(abs(mu1_c), 1.0)
    g_s = 1.0 / (kappa1 * kappa1)
    s_far = min(8.0 * g_s, 0.2)
    k_s_bank = sorted({
        min(n, max(1, round((1.0 - frac * s_far) / h)))
        for frac in (0.0, 0.08, 0.2, 0.4, 0.65, 1.0)
    }, reverse=True)

    # crossing-window width from the transverse curvature of the form
    # (one-sided below the corner when the optimizer sits at t = 1)
    eps = min(1e-5, ts / 4)
    if ts + eps <= 1.0:
        q_tt = (
            quad_form(1.0, ts + eps, rho, a)
            - 2.0 * quad_form(1.0, ts, rho, a)
            + quad_form(1.0, ts - eps, rho, a)
        ) / (eps * eps)
    else:
        q_tt = (
            quad_form(1.0, ts - 2 * eps, rho, a)
            - 2.0 * quad_form(1.0, ts - eps, rho, a)
            + quad_form(1.0, ts, rho, a)
        ) / (eps * eps)
    sigma_t = 1.0 / max(p.u * math.sqrt(max(q_tt, 1e-12) / 2.0), 1e-9)
    spacing = 1.0 / max(mu2_c * mu2_c, 1.0)
    half = _MIX_SPREAD * sigma_t
    lo = max(ts - half, 4.0 * h)
    hi = min(ts + half, 1.0)
    if hi <= lo:
        lo = hi / 2.0
    two_bumps = len(opt.points) == 2
    count = int((hi - lo) / max(spacing, h)) + 1
    per_s = max(1, _MIX_MAX_COMPONENTS // (len(k_s_bank) * (2 if two_bumps else 1)))
    count = max(1, min(count, per_s, max_components))
    k_t_bank = sorted(
        {
            min(n, max(1, round((lo + (hi - lo) * (j / max(count - 1, 1))) / h)))
            for j in range(count)
        }
    )

    rc = math.sqrt(1.0 - rho * rho)
    # allocation profile: proportional to where the ruin event concentrates
    # (longitudinal exponential decay away from the horizon, Gaussian
    # transverse profile around the optimizer time)
    eps_s = 1e-6
    dqds = (quad_form(1.0, ts, rho, a) - quad_form(1.0 - eps_s, ts, rho, a)) / eps_s
    decay_s = abs(dqds) * p.u * p.u / 2.0
    plans = []
    comps = []
    allocs = []

    def profile(s_edge: float, t_mid: float) -> float:
        g_edge = math.exp(-decay_s * min(1.0 - s_edge, 50.0 / max(decay_s, 1.0)))
        g_mid = math.exp(-((t_mid - ts) ** 2) / (2.0 * sigma_t * sigma_t))
        return g_edge * g_mid

    def emit(k1: int, k2: int) -> None:
        """Add the minimum-energy component targeting the coordinate-1 ruin
        level at step k1 and the coordinate-2 level at step k2."""
        s1 = k1 * h
        s2 = k2 * h
        mu1, mu2 = solve_mu(s1, s2)
        # driver tilt rates: theta1 = mu1*1[t<=s1] + mu2*rho*1[t<=s2],
        # theta2 = mu2*sqrt(1-rho^2)*1[t<=s2]
        knots = [0.0, min(s1, s2)]
        if max(s1, s2) > knots[-1]:
            knots.append(max(s1, s2))
        if knots[-1] < 1.0:
            knots.append(1.0)
        knots = tuple(knots)

        def acc(rate_spans):
            # rate_spans: [(rate, upto)] contributions active on [0, upto]
            return tuple(
                sum(rate * min(t, upto) for rate, upto in rate_spans)
                for t in knots
            )

        th1 = acc([(mu1, s1), (mu2 * rho, s2)])
        th2 = acc([(mu2 * rc, s2)])
        w1 = acc([(mu1, s1), (mu2 * rho, s2), (-p.c1, 1.0)])
        w2 = acc([(rho * mu1, s1), (mu2, s2), (-p.c2, 1.0)])
        plans.append((knots, w1, w2, th1, th2))
        m = min(s1, s2)
        energy = 0.5 * (
            mu1 * (mu1 * s1 + mu2 * rho * m) + mu2 * (mu1 * rho * m + mu2 * s2)
        )
        terms = (
            (0, k1, mu1),
            (0, k2, mu2 * rho),
            (1, k2, mu2 * rc),
        )
        comps.append((k2, energy, terms))
        allocs.append(profile(max(s1, s2), min(s1, s2)))

    for k_s in k_s_bank:
        for k_t in k_t_bank:
            if k_t >= k_s and ts < 1.0:
                continue  # interior-optimizer bank keeps t targets below s0
            emit(k_s, k_t)
    if two_bumps:
        # symmetric model: the mirrored optimizer contributes its own bump,
        # with the coordinate roles swapped
        for k_s in k_s_bank:
            for k_t in k_t_bank:
                if k_t >= k_s:
                    continue
                emit(k_t, k_s)
    if not plans:
        # degenerate geometry (targets collide): single component at the grid
        k_s = k_s_bank[0]
        k_t = max(1, min(k_t_bank[0], k_s - 1))
        emit(k_s, k_t)
    return plans, comps, allocs





def mc_ruin_importance(
    params: ModelParams, cfg: MCConfig, workers: int | None = None
) -> MCEstimate:
    """Importance-sampled estimate of the joint ruin probability.

    With ``cfg.tilt`` set, every path is drawn under that constant drift pair
    and weighted by its Girsanov likelihood ratio.  Without it, chunks are
    stratified over the automatically derived bank of minimum-energy tilts
    (see the module notes) and weighted against the mixture; with zero tilt
    the estimator reduces exactly to :func:`mc_ruin`.
    """
    sizes = _chunk_sizes(cfg)
    rho = params.rho
    horizon = params.horizon
    n = cfg.n_samples
    if cfg.tilt is not None:
        mu1, mu2 = cfg.tilt
        if mu1 == 0.0 and mu2 == 0.0:
            plan = _plain_plan(horizon, params.c1, params.c2)
            return _run_chunks(
                "ruin", cfg, cfg.grid_points, horizon, rho,
                plan, (), 1, (params.u, params.v), workers,
            )[0]
        rc = math.sqrt(1.0 - rho * rho)
        th1_rate = mu1
        th2_rate = (mu2 - rho * mu1) / rc
        knots = (0.0, horizon)
        plan = (
            knots,
            (0.0, (mu1 - params.c1) * horizon),
            (0.0, (mu2 - params.c2) * horizon),
            (0.0, th1_rate * horizon),
            (0.0, th2_rate * horizon),
        )
        energy = 0.5 * (th1_rate**2 + th2_rate**2) * horizon
        comps = (
            (1.0, energy, ((0, cfg.grid_points, th1_rate), (1, cfg.grid_points, th2_rate))),
        )
        return _run_chunks(
            "ruin", cfg, cfg.grid_points, horizon, rho,
            plan, comps, 1, (params.u, params.v), workers,
        )[0]

    p = params.rescaled()
    try:
        bank_plans, bank_comps, allocs = _auto_mixture(p, cfg, cfg.n_samples)
    except ParameterError as exc:
        raise ParameterError(
            f"mc_ruin_importance: cannot derive a tilt ({exc}); pass cfg.tilt"
        ) from exc
    if not (p.u > 0.0 and p.v > 0.0):
        raise ParameterError("mc_ruin_importance: need u, v > 0 for the auto tilt")
    # map the unit-horizon bank onto the simulation horizon: times scale by
    # the horizon, rates (accumulated values are rate*time) by sqrt(horizon)
    rt = math.sqrt(horizon)
    if horizon != 1.0:
        bank_plans = [
            (
                tuple(t * horizon for t in knots),
                tuple(x * rt for x in w1),
                tuple(x * rt for x in w2),
                tuple(x * rt for x in th1),
                tuple(x * rt for x in th2),
            )
            for knots, w1, w2, th1, th2 in bank_plans
        ]
        bank_comps = [
            (k_t, energy, tuple((d, k, c / rt) for d, k, c in terms))
            for k_t, energy, terms in bank_comps
        ]
    # allocate paths across the bank proportionally to the event profile
    # (with a uniform floor), using exact largest-remainder quotas; mixture
    # shares are the exact assignment fractions, so the estimator is unbiased
    # for any profile
    total_alloc = sum(allocs) or 1.0
    kk = len(bank_plans)
    weights = [0.15 / kk + 0.85 * x / total_alloc for x in allocs]
    wsum = sum(weights)
    raw = [n * x / wsum for x in weights]
    quota = [int(q) for q in raw]
    short = n - sum(quota)
    order = sorted(range(kk), key=lambda j: raw[j] - quota[j], reverse=True)
    for j in order[:short]:
        quota[j] += 1
    keep = [j for j in range(kk) if quota[j] > 0]
    bank_plans = [bank_plans[j] for j in keep]
    components = tuple(
        (quota[j] / n, bank_comps[j][1], bank_comps[j][2]) for j in keep
    )
    cum = tuple(np.cumsum([0] + [quota[j] for j in keep]).tolist())
    offsets = [0]
    for sz in sizes[:-1]:
        offsets.append(offsets[-1] + sz)
    plans = [(bank_plans, cum, off) for off in offsets]
    return _run_chunks(
        "ruin", cfg, cfg.grid_points, horizon, rho,
        plans, components, 1, (params.u, params.v), workers,
    )[0]


def estimate_pickands_constant(
    rho: float,
    a: float,
    delta: float,
    cfg: MCConfig,
    workers: int | None = None,
) -> MCEstimate:
    """Simulation estimate of the joint-exceedance constant of regime I.

    Uses the identity that the double exponential-weighted integral of the
    joint exceedance indicator equals ``exp(l1 X + l2 Y) / (l1 l2)`` with
    ``X = sup_{[0,delta]}(W1(s) - s)`` and ``Y = sup_{[0,delta]}(W2(t) - a t)``
    computed on the *same coupled pair*, and averages that transform over
    paths.  ``delta = 0`` degenerates to ``1 / (l1 l2)`` exactly.

    For horizon coupling: runs with equal step ``delta / grid_points``, equal
    seed and chunk size extend the same paths, so estimates are pathwise
    non-decreasing in ``delta``.
    """
    lam1, lam2 = asymptotics.exp_rates(rho, a)
    if not (lam1 > 0.0 and lam2 > 0.0):
        raise ParameterError(
            f"estimate_pickands_constant: rates must be positive, got ({lam1}, {lam2})"
        )
    if delta < 0.0:
        raise ParameterError(f"estimate_pickands_constant: need delta >= 0, got {delta}")
    if delta == 0.0:
        val = 1.0 / (lam1 * lam2)
        return MCEstimate(val, 0.0, cfg.n_samples, (val, val))
    plan = (
        (0.0, delta),
        (0.0, -delta),
        (0.0, -a * delta),
        (0.0, 0.0),
        (0.0, 0.0),
    )
    return _run_chunks(
        "exp", cfg, cfg.grid_points, delta, rho,
        plan, (), 1, (lam1, lam2), workers,
    )[0]


def sample_path(
    rho: float,
    grid_points: int,
    horizon: float,
    rng: np.random.Generator,
) -> PathGrid:
    """Sample one coupled pair on a uniform grid (float64, no drift).

    The second coordinate is ``rho * B1 + sqrt(1 - rho^2) * B2`` for
    independent standard drivers, so per-step increments have covariance
    ``step * [[1, rho], [rho, 1]]`` and both coordinates start at zero.
    """
    if not abs(rho) < 1.0:
        raise ParameterError(f"sample_path: need |rho| < 1, got {rho}")
    if grid_points < 1:
        raise ParameterError(f"sample_path: need grid_points >= 1, got {grid_points}")
    if not horizon > 0.0:
        raise ParameterError(f"sample_path: need horizon > 0, got {horizon}")
    h = horizon / grid_points
    z = rng.standard_normal((2, grid_points)) * math.sqrt(h)
    b = np.zeros((2, grid_points + 1))
    b[:, 1:] = np.cumsum(z, axis=1)
    times = np.arange(grid_points + 1) * h
    w2 = rho * b[0] + math.sqrt(1.0 - rho * rho) * b[1]
    return PathGrid(times=times, w1=b[0], w2=w2)
