"""Capacity of the relay link when the source owns an unlimited battery.

Only the average harvested energy constrains the source then. Its input law
maximises I(X_S; Y_R) under an average-cost budget where every non-silent
symbol pays ``x**2 + P_C``; the relay sends Gaussian symbols and the end-to-end
capacity is the smaller of the two hop capacities.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass

import numpy as np
from numpy.polynomial.hermite_e import hermegauss
from scipy import optimize

from . import _conic, _kernels
from .channel import NormalizedChannel, SystemParams, build_normalized_channel
from .mi import DEFAULT_QUAD, LOG2E, MassPointDistribution, gaussian_capacity
from .results import CapacityResult

log = logging.getLogger(__name__)


class CostSolverError(RuntimeError):
    """The cost-constrained iteration did not converge."""

    def __init__(self, message, gap):
        super().__init__(f"{message} (duality gap {gap:.3e} bits)")
        self.gap = gap


@dataclass(frozen=True)
class CostConstrainedConfig:
    """Source grid and stopping rules of the cost-constrained solver.

    The source law lives on ``point_count`` uniform amplitudes in
    ``[-extent, extent]`` (sqrt(W)), never spaced closer than ``min_step``
    noise deviations. ``extent=None`` picks six times the square root of the
    larger of the budget and the power that maximises the Gaussian rate per
    unit cost; the grid grows (at most ``max_extent_growth`` times) while the
    outer tenth of it carries mass. ``budget_tolerance`` is relative to the
    budget and ``convergence_tolerance`` (bits) bounds the certified distance
    to the grid optimum, relaxed to ``relative_tolerance`` times the value
    for large capacities. Masses below ``prune_threshold`` times the largest
    non-silent mass are dropped.
    """

    extent: float | None = None
    point_count: int = 401
    min_step: float = 0.1
    budget_tolerance: float = 1e-9
    convergence_tolerance: float = 1e-7
    relative_tolerance: float = 1e-6
    max_iterations: int = 4
    max_extent_growth: int = 2
    prune_threshold: float = 1e-9

    def __post_init__(self):
        if self.point_count < 3 or self.point_count % 2 == 0:
            raise ValueError("point_count must be odd and >= 3")
        if not (self.budget_tolerance > 0 and self.convergence_tolerance > 0 and self.relative_tolerance > 0):
            raise ValueError("tolerances must be positive")
        if self.extent is not None and not self.extent > 0:
            raise ValueError("extent must be positive")
        if not self.min_step > 0 or self.max_iterations < 1:
            raise ValueError("min_step and max_iterations must be positive")


DEFAULT_COST_CONFIG = CostConstrainedConfig()


def source_symbol_cost(x_S, P_C: float):
    """Energy drawn from the battery by one source symbol."""
    x = np.asarray(x_S, dtype=float)
    out = np.where(x == 0, 0.0, x * x + P_C)
    return float(out) if out.ndim == 0 else out


def _efficient_power(pc: float) -> float:
    """Power (noise units) maximising ``log(1 + s) / (s + pc)``."""
    if pc <= 0:
        return 0.0
    # stationarity: (s + pc) / (1 + s) = log(1 + s)
    fn = lambda s: (s + pc) / (1 + s) - math.log1p(s)
    hi = 1.0
    while fn(hi) > 0:
        hi *= 2
    return optimize.brentq(fn, 0.0, hi, xtol=1e-12, rtol=1e-12)


def _grid(X, cfg):
    k = max(1, min(cfg.point_count // 2, int(X / cfg.min_step)))
    return X * np.arange(-k, k + 1) / k  # exact zero in the middle


def _meet_budget(p, c, b, zero):
    """Nudge ``p`` onto ``c @ p == b`` by mixing with the silent symbol or the costliest pair."""
    cost = float(c @ p)
    if cost > b:
        t = (cost - b) / cost
        p = (1 - t) * p
        p[zero] += t
    elif cost < b:
        i = int(np.flatnonzero(p > 0).max())
        j = p.size - 1 - i
        t = (b - cost) / (c[i] - cost)
        p = (1 - t) * p
        p[i] += t / 2
        p[j] += t / 2
    return p


def _certify(x, p, c, b, z, wz):
    """Mutual information (nats) of ``p`` and an upper bound on the grid optimum.

    For any output law ``q`` and multiplier ``lam >= 0`` the grid capacity is
    at most ``max_i KL(W_i || q) - lam * c_i + lam * b``. ``q`` is the output
    of ``p`` blended with a sliver of the uniform input, which keeps the
    bound finite at grid points the solver left (numerically) empty.
    """
    n = x.size
    half = slice(n // 2, None)
    s = p > 0
    D = _kernels.divergence(x[half], x[s], p[s], z, wz)[0]
    D = np.concatenate([D[:0:-1], D])
    mi = float(p @ D)
    best = (np.inf, 0.0)
    A = np.stack([-np.ones(n), -c], axis=1)
    for eps in (1e-8, 1e-10, 1e-12, 1e-14, 1e-16):
        mix = (1 - eps) * p + eps / n
        Dq = _kernels.divergence(x[half], x, mix, z, wz)[0]
        Dq = np.concatenate([Dq[:0:-1], Dq])
        res = optimize.linprog([1.0, b], A_ub=A, b_ub=-Dq, bounds=[(None, None), (0, None)], method="highs")
        if res.status == 0 and res.fun < best[0]:
            best = (float(res.fun), float(res.x[1]))
    return mi, best[0], best[1], D


def _cost_solve(b, pc, X, cfg, z, wz):
    import cvxpy as cp

    info = {}
    growth = 0
    while True:
        x = _grid(X, cfg)
        n = x.size
        zero = n // 2
        c = source_symbol_cost(x, pc)
        chan = _conic.LatticeChannel(x)
        floor = min(0.5, b / (b + pc))
        e0 = np.zeros(n)
        e0[zero] = 1.0
        ref = e0
        best = None
        for rnd in range(1, cfg.max_iterations + 1):
            p_var = cp.Variable(n, nonneg=True)
            prob = cp.Problem(
                cp.Maximize(_conic.info_expression(chan, p_var, chan.reference(ref, floor))),
                [cp.sum(p_var) == 1, (c / b) @ p_var == 1],
            )
            _conic.solve(prob)
            p = np.maximum(np.asarray(p_var.value, dtype=float), 0.0)
            p = 0.5 * (p + p[::-1])
            p /= p.sum()
            loud = np.arange(n) != zero
            top = p[loud].max(initial=0.0)
            p[loud & (p < cfg.prune_threshold * top)] = 0.0
            p = _meet_budget(p / p.sum(), c, b, zero)
            mi, upper, lam, D = _certify(x, p, c, b, z, wz)
            gap = upper - mi
            log.debug("round %d: I=%.6e nats, gap=%.3e nats", rnd, mi, gap)
            if best is None or gap < best[1]:
                best = (p, gap, lam, mi, D, rnd)
            if gap * LOG2E <= max(cfg.convergence_tolerance, cfg.relative_tolerance * mi * LOG2E):
                break
            # retry around a different reference law; the best certificate wins
            floor = min(0.5, floor * (1e3 if rnd % 2 else 1e-4))
        p, gap, lam, mi, D, rnd = best
        edge = np.abs(x) > 0.9 * X
        loud_mass = 1.0 - p[zero]
        if growth < cfg.max_extent_growth and loud_mass > 0 and p[edge].sum() > 1e-6 * loud_mass:
            X *= 1.5
            growth += 1
            continue
        break
    on = p > 0
    info = {
        "rounds": rnd,
        "gap": gap,
        "lam": lam,
        "support_residual": float(np.max(np.abs(D[on] - lam * c[on] - (mi - lam * b)))),
        "extent": X,
        "grid_points": n,
    }
    if gap * LOG2E > max(cfg.convergence_tolerance, cfg.relative_tolerance * mi * LOG2E):
        raise CostSolverError(f"no certified optimum after {cfg.max_iterations} conic solves", gap * LOG2E)
    return x, p, mi, info


def solve_cost_constrained_capacity(sigma_R_sq: float, budget: float, P_C: float, config: CostConstrainedConfig = DEFAULT_COST_CONFIG):
    """Capacity-achieving source law under the average cost budget.

    Maximises ``I(X_S; Y_R)`` over symmetric laws on the source grid subject
    to ``E[cost(X_S)] == budget`` with ``cost`` as in
    :func:`source_symbol_cost`. Returns ``(dist, bits, info)``; ``dist`` lives
    in sqrt(W) units and ``info`` carries the cost multiplier (bits/W), the
    certified gap to the grid optimum (bits) and the achieved average cost (W).
    """
    if not budget > 0:
        raise ValueError("budget must be positive")
    if not sigma_R_sq > 0:
        raise ValueError("sigma_R_sq must be positive")
    if P_C < 0:
        raise ValueError("P_C must be non-negative")
    scale = math.sqrt(sigma_R_sq)
    b = budget / sigma_R_sq
    pc = P_C / sigma_R_sq
    if config.extent is None:
        X = 6.0 * math.sqrt(max(b, _efficient_power(pc)))
    else:
        X = config.extent / scale
    z, wz = DEFAULT_QUAD.rule()
    x, p, mi, info = _cost_solve(b, pc, X, config, z, wz)
    keep = p > 0
    dist = MassPointDistribution.from_unnormalized(x[keep] * scale, p[keep])
    cost = float(source_symbol_cost(x[keep], pc) @ p[keep]) * sigma_R_sq
    if abs(cost - budget) > config.budget_tolerance * budget:
        raise CostSolverError(f"budget missed by {abs(cost - budget) / budget:.2e} (relative)", info["gap"] * LOG2E)
    out = {
        "multiplier": info["lam"] * LOG2E / sigma_R_sq,
        "duality_gap_bits": max(info["gap"], 0.0) * LOG2E,
        "support_residual_bits": info["support_residual"] * LOG2E,
        "cost": cost,
        "rounds": info["rounds"],
        "extent": info["extent"] * scale,
        "grid_points": info["grid_points"],
        "support_size": len(dist),
    }
    return dist, mi * LOG2E, out


def _gauss_hermite_law(power: float, n: int = 41) -> MassPointDistribution:
    if power == 0:
        return MassPointDistribution.point_mass(0.0)
    z, w = hermegauss(n)
    return MassPointDistribution.from_unnormalized(z * math.sqrt(power), w)


def capacity_unlimited_battery(channel: NormalizedChannel | None, params: SystemParams, config: CostConstrainedConfig = DEFAULT_COST_CONFIG) -> CapacityResult:
    """Capacity with an unlimited source battery, min of the two hop capacities."""
    if channel is None:
        channel = build_normalized_channel(params)
    budget = params.eta * channel.h_RS_sq * params.P_R
    c_rd = gaussian_capacity(params.P_R, channel.sigma_D_sq)
    relay = _gauss_hermite_law(params.P_R)
    if budget <= 0:
        dist, c_sr, info = MassPointDistribution.point_mass(0.0), 0.0, {}
    else:
        dist, c_sr, info = solve_cost_constrained_capacity(channel.sigma_R_sq, budget, params.P_C, config)
    bottleneck = "source-relay" if c_sr <= c_rd else "relay-destination"
    return CapacityResult.build(
        min(c_sr, c_rd),
        params.symbol_rate,
        case_tag="Unlimited",
        relay_dist=relay,
        bottleneck=bottleneck,
        source_dist=dist,
        relay_gaussian=params.P_R > 0,
        details={"source_relay_bits": c_sr, "relay_destination_bits": c_rd, "budget": budget, **info},
    )
