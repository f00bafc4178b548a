import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from wetrelay.battery import (
    CostConstrainedConfig,
    capacity_unlimited_battery,
    solve_cost_constrained_capacity,
    source_symbol_cost,
)
from wetrelay.batteryless import capacity_batteryless
from wetrelay.channel import SystemParams, build_normalized_channel
from wetrelay.mi import gaussian_capacity


def _blahut_arimoto(x, cost, budget, iters=400, dy=0.05):
    """Cost-constrained Blahut-Arimoto on a discretised unit-noise channel (bits)."""
    y = np.arange(x.min() - 8, x.max() + 8, dy)
    W = np.exp(-0.5 * (y[None, :] - x[:, None]) ** 2)
    W /= W.sum(1, keepdims=True)
    logW = np.log(np.maximum(W, 1e-300))

    def run(s):
        p = np.full(x.size, 1.0 / x.size)
        for _ in range(iters):
            D = (W * (logW - np.log(p @ W + 1e-300))).sum(1)
            p = p * np.exp(D - s * cost)
            p /= p.sum()
        D = (W * (logW - np.log(p @ W + 1e-300))).sum(1)
        return p, float(p @ D)

    lo, hi = 0.0, 4.0
    for _ in range(30):
        s = 0.5 * (lo + hi)
        p, _ = run(s)
        lo, hi = (s, hi) if p @ cost > budget else (lo, s)
    p, mi = run(hi)
    return mi / math.log(2), float(p @ cost)


def test_symbol_cost():
    assert source_symbol_cost(0.0, 1e-3) == 0.0
    assert source_symbol_cost(math.sqrt(2e-3), 1e-3) == pytest.approx(3e-3)
    np.testing.assert_array_equal(source_symbol_cost(np.array([-2.0, 2.0]), 0.5), [4.5, 4.5])


@pytest.mark.parametrize("budget,pc", [(2.0, 1.0), (0.5, 2.0)])
def test_against_blahut_arimoto(budget, pc):
    _, bits, info = solve_cost_constrained_capacity(1.0, budget, pc)
    x = np.arange(-6.0, 6.001, 0.25)
    ba, ba_cost = _blahut_arimoto(x, np.where(x == 0, 0.0, x * x + pc), budget)
    assert ba_cost <= budget * (1 + 1e-6)
    # the coarse BA law is feasible for a nearby grid, so it is (almost) a lower bound
    assert bits >= ba - 1e-4
    assert bits - ba < 2e-3
    assert info["duality_gap_bits"] <= 1e-6


def test_frozen_values():
    assert solve_cost_constrained_capacity(1.0, 2.0, 1.0)[1] == pytest.approx(0.7024847093220746, abs=1e-7)
    assert solve_cost_constrained_capacity(1.0, 0.5, 2.0)[1] == pytest.approx(0.21231757396591033, abs=1e-7)


@pytest.mark.parametrize("budget,pc", [(1e-3, 0.5), (0.3, 1.0), (5.0, 1e-3), (50.0, 20.0)])
def test_silent_symbol_and_budget_equality(budget, pc):
    dist, bits, info = solve_cost_constrained_capacity(1.0, budget, pc)
    assert 0.0 in dist.values
    assert dist.probs[np.searchsorted(dist.values, 0.0)] > 0
    assert info["cost"] == pytest.approx(budget, rel=1e-9)
    c = float(source_symbol_cost(dist.values, pc) @ dist.probs)
    assert c == pytest.approx(budget, rel=1e-9)
    np.testing.assert_allclose(dist.values, -dist.values[::-1], atol=1e-12)
    np.testing.assert_allclose(dist.probs, dist.probs[::-1], atol=1e-8)


@pytest.mark.parametrize("budget", [0.05, 0.78, 5.0, 40.0])
def test_zero_circuit_cost_near_gaussian(budget):
    bits = solve_cost_constrained_capacity(1.0, budget, 0.0)[1]
    assert bits <= gaussian_capacity(budget, 1.0) + 1e-9
    assert gaussian_capacity(budget, 1.0) - bits <= 0.02


def test_tiny_budget_forces_silence():
    dist, bits, _ = solve_cost_constrained_capacity(1.0, 1e-6, 1.0)
    assert bits < 1e-5
    assert dist.probs[np.searchsorted(dist.values, 0.0)] > 1 - 1e-5


def test_monotone_in_budget_and_circuit_cost():
    by_budget = [solve_cost_constrained_capacity(1.0, b, 1.0)[1] for b in (0.1, 0.5, 2.0, 8.0)]
    assert np.all(np.diff(by_budget) > 0)
    by_pc = [solve_cost_constrained_capacity(1.0, 1.0, pc)[1] for pc in (0.0, 0.5, 2.0, 8.0)]
    assert np.all(np.diff(by_pc) < 0)


def test_grid_refinement_stable():
    a = solve_cost_constrained_capacity(1.0, 2.0, 1.0)[1]
    b = solve_cost_constrained_capacity(1.0, 2.0, 1.0, CostConstrainedConfig(point_count=801, min_step=0.05))[1]
    assert abs(a - b) < 1e-4


@pytest.mark.parametrize("bad", [(1.0, 0.0, 1.0), (0.0, 1.0, 1.0), (1.0, 1.0, -1.0)])
def test_invalid_inputs(bad):
    with pytest.raises(ValueError):
        solve_cost_constrained_capacity(*bad)


@pytest.mark.parametrize("kw", [{"point_count": 400}, {"budget_tolerance": 0.0}, {"extent": -1.0}, {"max_iterations": 0}])
def test_config_validation(kw):
    with pytest.raises(ValueError):
        CostConstrainedConfig(**kw)


def test_unlimited_frozen_and_structure(paper_params):
    res = capacity_unlimited_battery(None, paper_params.replace(P_R=1.0, P_C=0.0))
    assert res.capacity_bits_per_symbol == pytest.approx(0.416370958389, abs=1e-9)
    assert res.case_tag == "Unlimited" and res.bottleneck == "source-relay"
    assert res.relay_gaussian
    assert res.capacity_bits_per_sec == pytest.approx(2e5 * res.capacity_bits_per_symbol)


def test_unlimited_far_destination():
    p = SystemParams(P_R=1.0, d_RD=1e8)
    res = capacity_unlimited_battery(None, p)
    assert res.bottleneck == "relay-destination"
    assert res.capacity_bits_per_symbol < 1e-9


def test_unlimited_silent_relay():
    res = capacity_unlimited_battery(None, SystemParams(P_R=0.0))
    assert res.capacity_bits_per_symbol == 0.0


def test_unlimited_dominates_batteryless(fig_grid, paper_params):
    for pr in fig_grid[::3]:
        p = paper_params.replace(P_R=float(pr))
        ch = build_normalized_channel(p)
        assert capacity_unlimited_battery(ch, p).capacity_bits_per_symbol >= capacity_batteryless(ch, p).capacity_bits_per_symbol - 1e-6


@settings(max_examples=10)
@given(st.floats(0.05, 20.0), st.floats(0.0, 5.0))
def test_budget_met_property(budget, pc):
    dist, bits, info = solve_cost_constrained_capacity(1.0, budget, pc)
    assert abs(info["cost"] - budget) <= 1e-9 * budget
    if pc > 0:
        assert dist.probs[np.searchsorted(dist.values, 0.0)] > 0
    assert bits <= gaussian_capacity(budget, 1.0) + 1e-9
