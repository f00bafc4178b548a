"""Reference transmission schemes for comparison with the capacities.

1. Gaussian relay symbols with the optimal amplitude-constrained source.
2. The source harvests for ``t`` silent slots and then speaks once with a
   Gaussian codebook.
3. Scheme 2 without silent slots.

Every rate is capped by the Gaussian relay-destination capacity.
"""

from __future__ import annotations

import logging
import math

import numpy as np
from scipy import optimize

from .batteryless import SourceLink, _gauss_average
from .channel import NormalizedChannel, SystemParams, build_normalized_channel
from .mi import DEFAULT_QUAD, DEFAULT_SMITH, LOG2E, QuadratureSpec, SmithSolverConfig, gaussian_capacity

log = logging.getLogger(__name__)


def benchmark1_rate(channel: NormalizedChannel | None, params: SystemParams, quad: QuadratureSpec = DEFAULT_QUAD, smith: SmithSolverConfig = DEFAULT_SMITH) -> float:
    """Gaussian relay input, capacity-achieving amplitude-constrained source.

    ``min(E[g(X_R)], C_RD)`` with ``X_R ~ N(0, P_R)``.
    """
    del quad
    channel = channel or build_normalized_channel(params)
    rd = gaussian_capacity(params.P_R, channel.sigma_D_sq)
    sr = _gauss_average(SourceLink(channel, params, smith), params.P_R)
    return min(sr, rd)


def _slot_rate(t, k, pc, s2):
    """Source-relay rate of harvesting for ``t`` extra slots (bits per slot)."""
    y = 1.0 + np.asarray(t, dtype=float)
    snr = (y * k - pc) / s2
    with np.errstate(divide="ignore", invalid="ignore"):
        out = np.where(snr > 0, 0.5 * np.log1p(np.maximum(snr, 0)) * LOG2E / y, 0.0)
    return out


def _relaxed_optimum(k, pc, s2):
    """Real ``t >= 0`` maximising the slot rate (stationary point of a unimodal curve)."""
    if pc <= 0:
        return 0.0
    # d/dy log(1 + (y k - pc)/s2) / y = 0  <=>  a y / (a y + b) = log(a y + b)
    a = k / s2
    b = 1.0 - pc / s2
    y_lo = max(pc / k, 1.0)

    def slope(y):
        u = a * y + b
        return a * y / u - math.log(u)

    if slope(y_lo) <= 0:
        return y_lo - 1.0
    y_hi = 2.0 * y_lo
    while slope(y_hi) > 0:
        y_hi *= 2.0
    return optimize.brentq(slope, y_lo, y_hi, xtol=1e-12, rtol=1e-14) - 1.0


def benchmark2_search(channel: NormalizedChannel | None, params: SystemParams):
    """Best integer number of silent slots for scheme 2.

    Returns ``(bits, t, t_relaxed)``; ``bits`` is not yet capped by the
    relay-destination hop. The scan runs upward from just below the real
    optimum (or from the first slot count that covers ``P_C``) and stops
    after three consecutive decreases.
    """
    channel = channel or build_normalized_channel(params)
    k = params.eta * channel.h_RS_sq * params.P_R
    pc = params.P_C
    s2 = channel.sigma_R_sq
    if k <= 0:
        return 0.0, 0, 0.0
    t_feas = 0 if k > pc else int(math.floor(pc / k))  # (1 + t) k > pc
    while (1 + t_feas) * k <= pc:
        t_feas += 1
    t_real = _relaxed_optimum(k, pc, s2)
    t = max(t_feas, int(math.floor(t_real)) - 2)
    best_t, best = t, float(_slot_rate(t, k, pc, s2))
    prev, drops = best, 0
    while drops < 3:
        t += 1
        val = float(_slot_rate(t, k, pc, s2))
        drops = drops + 1 if val < prev else 0
        if val > best:
            best, best_t = val, t
        prev = val
    relaxed = float(_slot_rate(t_real, k, pc, s2))
    if relaxed - best > 1e-9:
        log.debug("integer slot count %d gives %.12g bits, relaxed %.6f gives %.12g", best_t, best, t_real, relaxed)
    return best, best_t, t_real


def benchmark2_rate(channel: NormalizedChannel | None, params: SystemParams) -> float:
    """Harvest for the best integer number of silent slots, then speak once."""
    channel = channel or build_normalized_channel(params)
    sr = benchmark2_search(channel, params)[0]
    return min(sr, gaussian_capacity(params.P_R, channel.sigma_D_sq))


def benchmark3_rate(channel: NormalizedChannel | None, params: SystemParams) -> float:
    """Speak every slot with whatever the last relay symbol delivered (no waiting)."""
    channel = channel or build_normalized_channel(params)
    k = params.eta * channel.h_RS_sq * params.P_R
    sr = float(_slot_rate(0, k, params.P_C, channel.sigma_R_sq))
    return min(sr, gaussian_capacity(params.P_R, channel.sigma_D_sq))
