"""Capacity of the relay link when the source has no battery.

The energy harvested from relay symbol ``x`` caps the amplitude of the next
source symbol at ``sqrt(f(x))``. Writing ``g(x)`` for the amplitude-constrained
capacity of the source-relay hop under that cap, the relay law ``p`` trades
the average ``sum g(x) p(x)`` against ``I(X_R; Y_D)``. Three regimes arise:
the source-relay hop binds (a linear program over ``p``), the relay-destination
hop binds (Gaussian relay input), or the two rates balance (a concave program).
At high SNR the first two have closed forms in terms of the Lambert W function.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field

import numpy as np
from numpy.polynomial.legendre import leggauss
from scipy import optimize

from . import _conic, _kernels
from .battery import _gauss_hermite_law
from .channel import ConfigError, NormalizedChannel, SystemParams, build_normalized_channel, usable_energy
from .lambertw import BRANCHES, INV_E, PRINCIPAL, LambertDomainError, lambert_w
from .mi import (
    DEFAULT_QUAD,
    DEFAULT_SMITH,
    LN2,
    LOG2E,
    AmplitudeCapacity,
    MassPointDistribution,
    QuadratureSpec,
    SmithSolverConfig,
    gaussian_capacity,
    mi_bpsk_exact,
    mi_discrete_awgn,
    mi_uniform_approx,
)
from .results import CapacityResult

log = logging.getLogger(__name__)


class BalanceError(RuntimeError):
    """The balanced-case program ended with unequal hop rates."""

    def __init__(self, sr_bits, rd_bits):
        super().__init__(f"hop rates did not balance: source-relay {sr_bits:.9g} bits, relay-destination {rd_bits:.9g} bits")
        self.sr_bits = sr_bits
        self.rd_bits = rd_bits


class StationarityError(RuntimeError):
    """No Lambert W branch produced a stationary three-point amplitude."""

    def __init__(self, candidates):
        desc = ", ".join(f"{b}: x0^2={x2!r}, residual={r!r}" for b, x2, r in candidates)
        super().__init__(f"no branch satisfies the stationarity check ({desc})")
        self.candidates = candidates


@dataclass(frozen=True)
class RelayGridSpec:
    """Uniform symmetric relay grid ``max_amplitude * k / K``, ``k = -K..K``.

    ``max_amplitude=None`` lets :func:`capacity_batteryless` pick the larger of
    ``4 sqrt(P_R)`` and 1.5 times the amplitude that maximises the
    source-relay rate per unit relay power.
    """

    max_amplitude: float | None = None
    point_count: int = 201
    symmetric: bool = True

    def __post_init__(self):
        if self.point_count < 3 or self.point_count % 2 == 0:
            raise ValueError("point_count must be odd and >= 3")
        if not self.symmetric:
            raise ValueError("only symmetric relay grids are supported")
        if self.max_amplitude is not None and not self.max_amplitude > 0:
            raise ValueError("max_amplitude must be positive")

    def amplitudes(self) -> np.ndarray:
        if self.max_amplitude is None:
            raise ValueError("grid extent not resolved")
        k = self.point_count // 2
        return self.max_amplitude * np.arange(-k, k + 1) / k

    def half(self) -> np.ndarray:
        """Non-negative grid amplitudes, starting at 0."""
        k = self.point_count // 2
        return self.max_amplitude * np.arange(0, k + 1) / k

    def check(self, P_R: float) -> None:
        if self.max_amplitude is None:
            raise ValueError("grid extent not resolved")
        if self.max_amplitude**2 < P_R * (1 - 1e-12):
            raise ConfigError(f"relay grid too narrow: max_amplitude^2 = {self.max_amplitude**2:.6g} < P_R = {P_R:.6g}")


@dataclass(frozen=True)
class BatterylessConfig:
    """Solver settings for the batteryless capacity.

    ``balance_tolerance`` (bits) bounds the gap between the two hop rates
    accepted in the balanced case. ``use_corollary`` enables the high-SNR
    closed forms as a fast path.
    """

    smith: SmithSolverConfig = field(default_factory=SmithSolverConfig)
    quad: QuadratureSpec = field(default_factory=QuadratureSpec)
    balance_tolerance: float = 1e-6
    stationarity_tolerance: float = 1e-5
    use_corollary: bool = True
    case3_max_iter: int = 500

    def __post_init__(self):
        if not (self.balance_tolerance > 0 and self.stationarity_tolerance > 0):
            raise ValueError("tolerances must be positive")


DEFAULT_BATTERYLESS = BatterylessConfig()


@dataclass
class CodingPlan:
    """Per-state source rates of the rate-scaling coding scheme."""

    epsilon: float
    per_state_rates: dict
    scaling_Q: float
    relay_rate_R_R: float


# ---------------------------------------------------------------------------
# source-relay hop


class SourceLink:
    """``g(x)``: amplitude-constrained source-relay capacity behind relay symbol ``x``.

    Values are memoised, so one instance should serve one parameter set.
    """

    def __init__(self, channel: NormalizedChannel, params: SystemParams, smith: SmithSolverConfig = DEFAULT_SMITH):
        self.channel = channel
        self.params = params
        self.smith = smith
        self.gain = params.eta * channel.h_RS_sq
        self.cap = AmplitudeCapacity(smith)

    def snr(self, x):
        return usable_energy(x, self.params.eta, self.channel.h_RS_sq, self.params.P_C) / self.channel.sigma_R_sq

    def amplitude_at(self, snr: float) -> float:
        """Relay amplitude whose usable harvest gives ``snr``."""
        return math.sqrt((snr * self.channel.sigma_R_sq + self.params.P_C) / self.gain)

    def __call__(self, x):
        return self.cap(self.snr(x))

    def high_snr(self, x) -> float:
        """Closed-form high-SNR value of ``g``."""
        return mi_uniform_approx(float(self.snr(x)))

    def source_law(self, x) -> MassPointDistribution:
        return self.cap.report(float(self.snr(x))).dist


def avg_sr_mi(relay_dist: MassPointDistribution, channel: NormalizedChannel, params: SystemParams, smith: SmithSolverConfig = DEFAULT_SMITH) -> float:
    """Average source-relay rate ``sum g(x) p(x)`` under a relay law, bits."""
    link = SourceLink(channel, params, smith)
    return float(link(relay_dist.values) @ relay_dist.probs)


# ---------------------------------------------------------------------------
# case 1: linear program


def _envelope_lp(s, g, P):
    """Best ``sum g p`` with ``sum s p <= P`` over laws on the points ``s`` (ascending).

    Returns ``(value, idx, weights)`` with one or two support indices.
    """
    ok = np.flatnonzero(s <= P)
    i = ok[np.argmax(g[ok])]
    best = (float(g[i]), (int(i),), (1.0,))
    lo = ok
    hi = np.flatnonzero(s > P)
    if hi.size and lo.size:
        th = (P - s[lo])[:, None] / (s[hi][None, :] - s[lo][:, None])
        val = g[lo][:, None] * (1 - th) + g[hi][None, :] * th
        a, b = np.unravel_index(np.argmax(val), val.shape)
        if val[a, b] > best[0]:
            t = float(th[a, b])
            best = (float(val[a, b]), (int(lo[a]), int(hi[b])), (1 - t, t))
    return best


def _case1(half, gh, P_R):
    val, idx, w = _envelope_lp(half**2, gh, P_R)
    keep = [k for k, wk in enumerate(w) if wk > 1e-12]  # drop rounding-level mixes
    wk = np.array([w[k] for k in keep])
    dist = MassPointDistribution.symmetric(half[[idx[k] for k in keep]], wk / wk.sum())
    return dist, val


def solve_case1(grid: RelayGridSpec, channel: NormalizedChannel, params: SystemParams, smith: SmithSolverConfig = DEFAULT_SMITH, *, link: SourceLink | None = None):
    """Relay law on the grid maximising the average source-relay rate.

    Exact: the program is linear with one power constraint, so an optimum
    sits on at most two amplitudes (mirrored to keep the law symmetric).
    Returns ``(dist, bits)``.
    """
    grid.check(params.P_R)
    link = link or SourceLink(channel, params, smith)
    half = grid.half()
    return _case1(half, link(half), params.P_R)


# ---------------------------------------------------------------------------
# case 2: Gaussian relay input


def _gauss_average(link: SourceLink, P_R: float, nodes: int = 32) -> float:
    """``E[g(X)]`` for ``X ~ N(0, P_R)`` by Gauss-Legendre panels.

    ``g`` vanishes below the harvest threshold and switches formula at the
    solver's SNR thresholds, so panel edges are placed there.
    """
    if P_R <= 0:
        return 0.0
    sd = math.sqrt(P_R)
    cfg = link.smith
    x_th = math.sqrt(link.params.P_C / link.gain)
    if x_th > 38.0 * sd:  # density underflows
        return 0.0
    top = x_th + 12.0 * sd
    edges = {x_th, top}
    for snr in (cfg.low_snr_threshold, cfg.high_snr_threshold):
        xe = link.amplitude_at(snr)
        if x_th < xe < top:
            edges.add(xe)
    edges = sorted(edges)
    t, w = leggauss(nodes)
    total = 0.0
    for lo, hi in zip(edges[:-1], edges[1:]):
        pieces = max(1, int(math.ceil((hi - lo) / (0.5 * sd))))
        cuts = np.linspace(lo, hi, pieces + 1)
        for a, b in zip(cuts[:-1], cuts[1:]):
            x = 0.5 * (b - a) * t + 0.5 * (a + b)
            dens = np.exp(-0.5 * (x / sd) ** 2) / (sd * math.sqrt(2 * math.pi))
            total += 0.5 * (b - a) * float((w * dens) @ link(x))
    return 2.0 * total  # g is even


def check_case2(channel: NormalizedChannel, params: SystemParams, quad: QuadratureSpec = DEFAULT_QUAD, smith: SmithSolverConfig = DEFAULT_SMITH, *, link: SourceLink | None = None):
    """Test whether the relay-destination hop with Gaussian relay input binds.

    Returns ``(holds, lhs, rhs)``: ``lhs`` is the Gaussian relay-destination
    capacity, ``rhs`` the average source-relay rate under that Gaussian
    input, and the case holds iff ``lhs < rhs``.
    """
    del quad  # the panels use their own Gauss-Legendre rule
    link = link or SourceLink(channel, params, smith)
    lhs = gaussian_capacity(params.P_R, channel.sigma_D_sq)
    rhs = _gauss_average(link, params.P_R)
    return lhs < rhs, lhs, rhs


# ---------------------------------------------------------------------------
# case 3: balanced hops


def _sym_density(u, w, z, wz, at=None):
    """Information density (nats) of the law ``w`` mirrored about 0.

    ``u`` are non-negative amplitudes in noise units and ``w[k]`` the total
    mass at ``+-u[k]``; the density is evaluated at ``at`` (default ``u``).
    """
    pts = np.concatenate([-u, u])
    probs = np.concatenate([w, w]) / 2
    return _kernels.divergence(u if at is None else at, pts, probs, z, wz)[0]


def _conic_case3(half, gh, P_R, u_pts, start):
    """Grid epigraph program on the output lattice; returns half-grid masses."""
    import cvxpy as cp

    n = half.size
    step = u_pts[1] - u_pts[0]
    thin = max(1, int(math.ceil(0.02 / step)))  # inputs far closer than the noise add nothing
    sub = np.arange(0, n, thin)
    full = np.concatenate([-u_pts[sub][:0:-1], u_pts[sub]])
    chan = _conic.LatticeChannel(full)
    m = sub.size
    # mirror map from half-grid masses to the full symmetric law
    k = np.arange(1, m)
    mirror = np.zeros((2 * m - 1, m))
    mirror[m - 1, 0] = 1.0
    mirror[m - 1 - k, k] = 0.5
    mirror[m - 1 + k, k] = 0.5
    w0 = np.asarray(start, dtype=float)[sub]
    if w0.sum() <= 0:
        w0 = np.eye(m)[0]
    ref = chan.reference(mirror @ (w0 / w0.sum()), 0.5)
    w = cp.Variable(m, nonneg=True)
    u = cp.Variable()
    s = half[sub] ** 2
    prob = cp.Problem(
        cp.Maximize(u),
        [
            u <= gh[sub] @ w,
            u <= LOG2E * _conic.info_expression(chan, mirror @ w, ref),
            (s / P_R) @ w <= 1,
            cp.sum(w) == 1,
        ],
    )
    _conic.solve(prob, tol=1e-9)
    out = np.zeros(n)
    out[sub] = np.maximum(np.asarray(w.value, dtype=float), 0.0)
    return out / out.sum()


def _polish_case3(idx, half, gh, P_R, u_pts, w_start, cfg, z, wz):
    """Exact-MI epigraph program restricted to the half-grid indices ``idx``."""
    s = half[idx] ** 2
    g = gh[idx]
    n = idx.size

    def mi_and_grad(w):
        d = _sym_density(u_pts[idx], w, z, wz, u_pts[idx]) * LOG2E
        return float(w @ d), d - LOG2E

    def c_info(v):
        return mi_and_grad(np.maximum(v[:-1], 0))[0] - v[-1]

    def c_info_jac(v):
        return np.append(mi_and_grad(np.maximum(v[:-1], 0))[1], -1.0)

    cons = [
        {"type": "eq", "fun": lambda v: v[:-1].sum() - 1.0, "jac": lambda v: np.append(np.ones(n), 0.0)},
        {"type": "ineq", "fun": lambda v: g @ v[:-1] - v[-1], "jac": lambda v: np.append(g, -1.0)},
        {"type": "ineq", "fun": c_info, "jac": c_info_jac},
        {"type": "ineq", "fun": lambda v: 1.0 - (s / P_R) @ v[:-1], "jac": lambda v: np.append(-s / P_R, 0.0)},
    ]
    w0 = w_start / w_start.sum()
    v0 = np.append(w0, min(g @ w0, mi_and_grad(w0)[0]))
    scale = max(v0[-1], 1e-12)
    res = optimize.minimize(
        lambda v: -v[-1] / scale, v0, jac=lambda v: np.append(np.zeros(n), -1.0 / scale),
        constraints=cons, bounds=[(0.0, 1.0)] * n + [(None, None)],
        method="SLSQP", options={"maxiter": cfg.case3_max_iter, "ftol": 1e-14},
    )
    w = np.maximum(res.x[:-1], 0.0)
    return w / w.sum(), int(res.nit)


def _case3(half, gh, P_R, sigma_D_sq, start, cfg: BatterylessConfig):
    """Maximise ``min(g . w, I(w))`` subject to ``s . w <= P_R`` on the half grid.

    ``w[k]`` is the total mass at ``+-half[k]``. A conic solve on the output
    lattice finds the support; an exact-MI SQP polish on that support (grown
    by any grid point violating the optimality condition) fixes the masses.
    Returns ``(w, sr, rd, info)`` with both rates in bits.
    """
    n = half.size
    s = half**2
    u_pts = half / math.sqrt(sigma_D_sq)
    z, wz = cfg.quad.rule()
    w = _conic_case3(half, gh, P_R, u_pts, start)
    idx = np.flatnonzero(w > 1e-7 * w.max())
    idx = np.unique(np.clip(np.concatenate([idx - 1, idx, idx + 1]), 0, n - 1))
    rounds = 0
    prev = -np.inf
    floor = np.full(n, 1.0 / n)
    for rounds in range(1, 5):
        wi, nit = _polish_case3(idx, half, gh, P_R, u_pts, w[idx] + 1e-9, cfg, z, wz)
        w = np.zeros(n)
        w[idx] = wi
        w[w < 1e-9 * w.max()] = 0.0  # numerically zero masses are not support
        w /= w.sum()
        if s @ w > P_R:  # shave rounding off the power constraint
            w[1:] *= P_R / (s @ w)
            w[0] = 1.0 - w[1:].sum()
        d = _sym_density(u_pts, w, z, wz) * LOG2E
        # Off the support the density is taken against the law with a 1e-9
        # floor: at high SNR an empty, isolated grid point has an enormous
        # density that collapses as soon as it carries any mass, so the raw
        # value would flag directions with no first-order gain.
        d_off = _sym_density(u_pts, (1 - 1e-9) * w + 1e-9 * floor, z, wz) * LOG2E
        dI = np.where(w > 0, d, d_off) - LOG2E
        kkt = _eq40_residual(w, gh, dI, s, P_R)
        val = min(float(gh @ w), float(w @ d))
        if kkt["off_support_excess"] <= cfg.stationarity_tolerance or val <= prev + 1e-12:
            break
        prev = val
        r = kkt["alpha"] * gh + (1 - kkt["alpha"]) * dI - kkt["lambda_bits_per_W"] * s - kkt["xi"]
        extra = np.flatnonzero(r > cfg.stationarity_tolerance)
        idx = np.union1d(np.flatnonzero(w > 0), extra)
    sr = float(gh @ w)
    rd = float(w @ d)
    info = {"polish_rounds": rounds, "iterations": nit}
    info.update(kkt)
    return w, sr, rd, info


def _eq40_residual(w, gh, dI, s, P_R):
    """Multipliers and residual of ``a g + (1 - a) dI - lam s - xi = 0`` on the support.

    The multipliers minimise the worst violation over the whole grid: equality
    on the support, ``<=`` elsewhere (a small LP in ``a, lam, xi, t``).
    """
    on = w > 0
    slack = P_R - s @ w > 1e-9 * max(P_R, 1e-300)
    # r = a (g - dI) - lam s - xi + dI
    G = np.stack([gh - dI, -s, -np.ones_like(s)], axis=1)
    rows = np.concatenate([G[on], -G[on], G[~on]])
    rhs = np.concatenate([-dI[on], dI[on], -dI[~on]])
    A = np.hstack([rows, -np.ones((rows.shape[0], 1))])
    bounds = [(0.0, 1.0), (0.0, 0.0 if slack else None), (None, None), (0.0, None)]
    fit = optimize.linprog([0, 0, 0, 1.0], A_ub=A, b_ub=rhs, bounds=bounds, method="highs")
    if fit.status != 0:
        a, lam, xi = 1.0, 0.0, float(np.mean(gh[on]))
    else:
        a, lam, xi = fit.x[:3]
    r = a * gh + (1 - a) * dI - lam * s - xi
    return {
        "alpha": float(a),
        "lambda_bits_per_W": float(lam),
        "xi": float(xi),
        "stationarity_residual": float(np.max(np.abs(r[on]))),
        "off_support_excess": float(max(0.0, r[~on].max(initial=-np.inf))),
    }


def solve_case3(grid: RelayGridSpec, channel: NormalizedChannel, params: SystemParams, config: BatterylessConfig = DEFAULT_BATTERYLESS, *, link: SourceLink | None = None, start=None, report: dict | None = None):
    """Relay law on the grid balancing the two hop rates.

    Maximises ``u`` subject to ``u <= sum g p``, ``u <= I(X_R; Y_D)`` and the
    relay power constraint by sequential quadratic programming on the
    (symmetric) grid. Raises :class:`BalanceError` if the two rates end more
    than ``balance_tolerance`` apart. Returns ``(dist, bits)``; diagnostics
    (multipliers, stationarity residual) go into ``report`` if given.
    """
    grid.check(params.P_R)
    link = link or SourceLink(channel, params, config.smith)
    half = grid.half()
    gh = link(half)
    if start is None:
        start = np.zeros(half.size)
        start[0] = 1.0
    w, sr, rd, info = _case3(half, gh, params.P_R, channel.sigma_D_sq, start, config)
    info.update(source_relay_bits=sr, relay_destination_bits=rd, balance_gap=abs(sr - rd))
    if report is not None:
        report.update(info)
    if abs(sr - rd) > config.balance_tolerance:
        raise BalanceError(sr, rd)
    on = w > 0
    return MassPointDistribution.symmetric(half[on], w[on]), min(sr, rd)


# ---------------------------------------------------------------------------
# high-SNR closed forms


def _cor2(channel: NormalizedChannel, params: SystemParams, tol: float = 1e-8):
    """Three-point amplitude, multiplier, chosen branch and residuals."""
    if not params.P_C > 0:
        raise ValueError("the three-point amplitude needs P_C > 0")
    a = params.eta * channel.h_RS_sq
    s2 = channel.sigma_R_sq
    pc = params.P_C
    K = math.pi * math.e * s2 / 2
    c = (pc - K) / K
    y = c / math.e
    # ratio = W(c / e) / c, with its limit 1/e at c = 0
    ratio = (1 - y + 1.5 * y * y) / math.e if abs(y) < 1e-6 else lambert_w(PRINCIPAL, y) / c
    lam = a * ratio / (2 * LN2 * K)  # bits per watt
    arg = -(2 * K * lam * LN2 / a) * math.exp(lam * LN2 * 2 * (pc - K) / a)
    arg = max(arg, -INV_E)  # analytically -1/e; rounding may dip below
    cands = []
    for br in BRANCHES:
        try:
            wv = lambert_w(br, arg)
        except LambertDomainError:
            continue
        x2 = (pc - K) / a - wv / (2 * lam * LN2)
        if not x2 * a > pc:
            cands.append((br, x2, math.inf))
            continue
        g = mi_uniform_approx((a * x2 - pc) / s2)
        cands.append((br, x2, abs(g - lam * x2)))
    good = [cd for cd in cands if cd[2] <= tol]
    if not good:
        raise StationarityError(cands)
    br, x2, res = min(good, key=lambda cd: cd[2])
    return {"x0": math.sqrt(x2), "lambda": lam, "branch": br, "residual": res, "candidates": cands}


def corollary2_x0_lambda(channel: NormalizedChannel, params: SystemParams):
    """High-SNR three-point amplitude ``x0`` and power multiplier ``lambda`` (bits/W).

    ``x0`` maximises the closed-form source-relay rate per unit relay power
    and does not depend on ``P_R``. Both real Lambert W branches are tried
    and the one passing the stationarity check is returned.
    """
    out = _cor2(channel, params)
    return out["x0"], out["lambda"]


def corollary2_report(channel: NormalizedChannel, params: SystemParams) -> dict:
    """:func:`corollary2_x0_lambda` with the branch choice and residuals."""
    return _cor2(channel, params)


def _efficient_amplitude(link: SourceLink) -> float:
    """Amplitude maximising ``g(x) / x**2`` (0 when ``P_C == 0``)."""
    params = link.params
    if params.P_C <= 0:
        return 0.0
    try:
        cor = _cor2(link.channel, params)
        if link.snr(cor["x0"]) > link.smith.high_snr_threshold:
            return cor["x0"]
    except (StationarityError, ValueError):
        pass
    snrs = np.logspace(-3, 4, 57)
    xs = np.array([link.amplitude_at(v) for v in snrs])
    eff = link(xs) / xs**2
    k = int(np.argmax(eff))
    lo, hi = xs[max(k - 1, 0)], xs[min(k + 1, xs.size - 1)]
    res = optimize.minimize_scalar(lambda x: -float(link(x)) / x**2, bounds=(lo, hi), method="bounded", options={"xatol": 1e-6 * hi})
    return float(res.x) if -res.fun >= eff[k] else float(xs[k])


def default_grid(link: SourceLink, point_count: int = 201) -> RelayGridSpec:
    P_R = link.params.P_R
    X = max(4.0 * math.sqrt(P_R), 1.5 * _efficient_amplitude(link))
    return RelayGridSpec(max_amplitude=X, point_count=point_count)


# ---------------------------------------------------------------------------
# dispatch


def _source_dists(link: SourceLink, dist: MassPointDistribution) -> dict:
    return {float(x): link.source_law(x) for x in dist.values}


def _cor2_fast_path(link: SourceLink, params: SystemParams, channel: NormalizedChannel, cfg: BatterylessConfig):
    thr = cfg.smith.high_snr_threshold
    P_R = params.P_R
    cor = None
    if params.P_C > 0:
        cor = _cor2(channel, params)
        x0 = cor["x0"]
        three_point = P_R < x0 * x0
    else:
        three_point = False
    if not three_point:
        x = math.sqrt(P_R)
        if not link.snr(x) > thr:
            return None
        c = link.high_snr(x)
        rd = mi_bpsk_exact(P_R / channel.sigma_D_sq)
        if not c < rd:
            return None
        relay = MassPointDistribution([-x, x], [0.5, 0.5])
        tag = "Cor2Case1"
    else:
        if not link.snr(x0) > thr:
            return None
        q = P_R / (x0 * x0)
        c = q * link.high_snr(x0)
        relay = MassPointDistribution([-x0, 0.0, x0], [q / 2, 1 - q, q / 2])
        rd = mi_discrete_awgn(relay, channel.sigma_D_sq, cfg.quad)
        if not c < rd:
            return None
        tag = "Cor2Case2"
    details = {"source_relay_bits": c, "relay_destination_bits": rd}
    if cor is not None:
        details.update(x0=cor["x0"], lambda_bits_per_W=cor["lambda"], branch=cor["branch"], eq44_residual=cor["residual"])
    return tag, c, relay, details


def capacity_batteryless(channel: NormalizedChannel | None, params: SystemParams, grid: RelayGridSpec | None = None, config: BatterylessConfig = DEFAULT_BATTERYLESS) -> CapacityResult:
    """Capacity with a batteryless source.

    The high-SNR closed forms are tried first (when enabled); otherwise the
    source-relay-bound case, the Gaussian relay-destination-bound case and
    the balanced case are tested in that order. ``grid=None`` (or a grid
    without extent) uses :func:`default_grid`.
    """
    if channel is None:
        channel = build_normalized_channel(params)
    link = SourceLink(channel, params, config.smith)
    rate = params.symbol_rate
    if params.P_R <= 0:
        relay = MassPointDistribution.point_mass(0.0)
        return CapacityResult.build(0.0, rate, case_tag="Case1", relay_dist=relay, bottleneck="source-relay",
                                    source_dists=_source_dists(link, relay))

    if config.use_corollary:
        fast = _cor2_fast_path(link, params, channel, config)
        if fast is not None:
            tag, c, relay, details = fast
            return CapacityResult.build(c, rate, case_tag=tag, relay_dist=relay, bottleneck="source-relay",
                                        source_dists=_source_dists(link, relay), details=details)

    if grid is None or grid.max_amplitude is None:
        grid = default_grid(link, grid.point_count if grid is not None else 201)
    grid.check(params.P_R)
    half = grid.half()
    gh = link(half)
    dist1, c1 = _case1(half, gh, params.P_R)
    rd1 = mi_discrete_awgn(dist1, channel.sigma_D_sq, config.quad)
    details = {"grid_max_amplitude": grid.max_amplitude, "grid_points": grid.point_count,
               "case1_bits": c1, "case1_relay_destination_bits": rd1}
    if c1 <= rd1:
        if log.isEnabledFor(logging.DEBUG) and check_case2(channel, params, link=link)[0]:
            log.debug("source-relay and relay-destination cases hold together at %s", params)
        details.update(source_relay_bits=c1, relay_destination_bits=rd1)
        return CapacityResult.build(c1, rate, case_tag="Case1", relay_dist=dist1, bottleneck="source-relay",
                                    source_dists=_source_dists(link, dist1), details=details)

    holds, lhs, rhs = check_case2(channel, params, link=link)
    details.update(case2_lhs_bits=lhs, case2_rhs_bits=rhs)
    if holds:
        relay = _gauss_hermite_law(params.P_R)
        details.update(source_relay_bits=rhs, relay_destination_bits=lhs)
        return CapacityResult.build(lhs, rate, case_tag="Case2", relay_dist=relay, bottleneck="relay-destination",
                                    relay_gaussian=True, source_dists=_source_dists(link, relay), details=details)

    start = np.zeros(half.size)
    for x, p in dist1.pairs():
        start[int(np.argmin(np.abs(half - abs(x))))] += p
    w, sr, rd, info = _case3(half, gh, params.P_R, channel.sigma_D_sq, start, config)
    details.update(info, source_relay_bits=sr, relay_destination_bits=rd, balance_gap=abs(sr - rd))
    c3 = min(sr, rd)
    bottleneck = "balanced"
    if abs(sr - rd) > config.balance_tolerance:
        # no balanced law on the grid: the smaller hop rate is the grid optimum
        details["unbalanced"] = True
        bottleneck = "relay-destination" if rd < sr else "source-relay"
        log.info("balanced case ended unbalanced (source-relay %.9g, relay-destination %.9g bits)", sr, rd)
    if c3 < rhs:
        # the Gaussian relay law is always feasible with rate min(lhs, rhs) = rhs
        relay = _gauss_hermite_law(params.P_R)
        details["gaussian_fallback"] = True
        return CapacityResult.build(rhs, rate, case_tag="Case3", relay_dist=relay, bottleneck="source-relay",
                                    relay_gaussian=True, source_dists=_source_dists(link, relay), details=details)
    on = w > 0
    dist3 = MassPointDistribution.symmetric(half[on], w[on])
    return CapacityResult.build(c3, rate, case_tag="Case3", relay_dist=dist3, bottleneck=bottleneck,
                                source_dists=_source_dists(link, dist3), details=details)


def rate_allocation(result: CapacityResult, epsilon: float, channel: NormalizedChannel | None = None, params: SystemParams | None = None, smith: SmithSolverConfig = DEFAULT_SMITH) -> CodingPlan:
    """Per-relay-state source rates of the rate-scaling scheme.

    ``R_S(x) = Q g(x) - eps'`` on the states that let the source speak, with
    ``Q = C / sum g p`` and ``eps'`` spreading ``epsilon`` over those states
    so that the average source rate equals ``R_R = C - epsilon``. Silent
    states get rate 0. ``g`` is taken from ``result.details`` when the
    channel is not given.
    """
    C = result.capacity_bits_per_symbol
    if not 0 < epsilon < C:
        raise ValueError(f"epsilon must lie in (0, C) = (0, {C!r})")
    relay = result.relay_dist
    if params is not None:
        link = SourceLink(channel or build_normalized_channel(params), params, smith)
        g = np.asarray(link(relay.values), dtype=float)
    else:
        g = np.array([result.details["g"][float(x)] for x in relay.values]) if "g" in result.details else None
        if g is None:
            raise ValueError("need params (or g values in result.details) to allocate rates")
    avg = float(g @ relay.probs)
    Q = C / avg
    live = g > 0
    p_live = float(relay.probs[live].sum())
    eps_state = epsilon / p_live
    rates = np.where(live, Q * g - eps_state, 0.0)
    return CodingPlan(epsilon, {float(x): float(r) for x, r in zip(relay.values, rates)}, Q, C - epsilon)
