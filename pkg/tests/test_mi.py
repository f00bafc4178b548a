import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from wetrelay.mi import (
    DEFAULT_SMITH,
    AmplitudeCapacity,
    MassPointDistribution,
    QuadratureError,
    QuadratureSpec,
    SmithConvergenceError,
    SmithSolverConfig,
    gaussian_capacity,
    information_density,
    max_mi_amplitude_constrained,
    mi_bpsk_exact,
    mi_discrete_awgn,
    mi_uniform_approx,
    smith_solve,
)

BPSK = MassPointDistribution([-1.0, 1.0], [0.5, 0.5])


# --- MassPointDistribution -------------------------------------------------

def test_canonical_form_merges_and_sorts():
    d = MassPointDistribution([1.0, -1.0, 1.0], [0.25, 0.5, 0.25])
    np.testing.assert_array_equal(d.values, [-1.0, 1.0])
    np.testing.assert_array_equal(d.probs, [0.5, 0.5])


@pytest.mark.parametrize("vals,probs", [([0.0], [0.9]), ([0.0, 1.0], [1.2, -0.2]), ([], []), ([np.inf], [1.0])])
def test_invalid_distributions(vals, probs):
    with pytest.raises(ValueError):
        MassPointDistribution(vals, probs)


@given(st.lists(st.tuples(st.integers(-20, 20), st.floats(0.01, 1.0)), min_size=1, max_size=12))
def test_canonical_invariants(pairs):
    d = MassPointDistribution.from_unnormalized([a / 4 for a, _ in pairs], [w for _, w in pairs])
    assert np.all(np.diff(d.values) > 0)
    assert np.all(d.probs >= 0) and abs(d.probs.sum() - 1) <= 1e-12


# --- closed forms ----------------------------------------------------------

def test_gaussian_capacity_trivial():
    assert gaussian_capacity(0.0, 1.0) == 0.0
    assert gaussian_capacity(3.0, 1.0) == pytest.approx(1.0, abs=1e-15)
    assert gaussian_capacity(15.0, 1.0) == pytest.approx(2.0, abs=1e-15)
    with pytest.raises(ValueError):
        gaussian_capacity(1.0, 0.0)


def test_uniform_approx():
    assert mi_uniform_approx(0.0) == 0.0
    assert mi_uniform_approx(1.5 * math.pi * math.e) == pytest.approx(1.0, abs=1e-14)
    assert mi_uniform_approx(1e3) == pytest.approx(0.5 * math.log2(1 + 2000 / (math.pi * math.e)), rel=1e-14)
    # direct substitution gives 3.939 bits
    assert mi_uniform_approx(1e3) == pytest.approx(3.9388700581, abs=1e-9)


def test_bpsk_exact_trivial_and_limit():
    assert mi_bpsk_exact(0.0) == 0.0
    assert 1.0 - 1e-10 < mi_bpsk_exact(50.0) < 1.0
    vals = [mi_bpsk_exact(s) for s in (1.0, 5.0, 10.0, 20.0)]
    assert all(v < 1.0 for v in vals) and vals == sorted(vals)
    with pytest.raises(ValueError):
        mi_bpsk_exact(-1.0)


def test_bpsk_two_formulas_agree():
    assert mi_bpsk_exact(1.0) == pytest.approx(mi_discrete_awgn(BPSK, 1.0), abs=1e-6)


def test_bpsk_monte_carlo_oracle():
    # independent estimator: I = E[log2 p(y|x) - log2 p(y)] with y = x + n
    rng = np.random.default_rng(12345)
    n = 10**7
    x = rng.choice([-1.0, 1.0], n)
    y = x + rng.standard_normal(n)
    # log p(y|x) - log p(y) = log 2 - log(1 + exp(-2 x y))
    est = np.mean(math.log(2) - np.logaddexp(0.0, -2.0 * x * y)) / math.log(2)
    got = mi_discrete_awgn(BPSK, 1.0)
    assert abs(got - est) < 1e-3
    assert got == pytest.approx(0.486, abs=1e-3)


def test_mixture_limits():
    assert mi_discrete_awgn(BPSK, 1e6) < 1e-6
    assert mi_discrete_awgn(BPSK, 1e-4) == pytest.approx(1.0, abs=1e-9)
    assert mi_discrete_awgn(MassPointDistribution.point_mass(3.0), 1.0) == 0.0


def test_adaptive_quadrature_matches_fixed():
    d = MassPointDistribution([-2.0, 0.0, 2.0], [0.3, 0.4, 0.3])
    fixed = mi_discrete_awgn(d, 0.7)
    adaptive = mi_discrete_awgn(d, 0.7, QuadratureSpec(method="adaptive"))
    assert adaptive == pytest.approx(fixed, abs=1e-9)


def test_adaptive_quadrature_reports_failure():
    spec = QuadratureSpec(node_count=16, method="adaptive", refine_tol_bits=1e-300, max_refinements=1)
    with pytest.raises(QuadratureError):
        mi_discrete_awgn(MassPointDistribution([-1.0, 1.0], [0.3, 0.7]), 0.5, spec)


@pytest.mark.parametrize("kw", [{"node_count": 8}, {"truncation_sigmas": 3.0}, {"method": "gauss"}])
def test_quadrature_spec_validation(kw):
    with pytest.raises(ValueError):
        QuadratureSpec(**kw)


@pytest.mark.parametrize("kw", [{"kkt_tolerance": 0.0}, {"low_snr_threshold": 200.0}, {"max_mass_points": 1}])
def test_smith_config_validation(kw):
    with pytest.raises(ValueError):
        SmithSolverConfig(**kw)


@given(st.lists(st.tuples(st.floats(-5, 5), st.floats(0.01, 1.0)), min_size=1, max_size=6), st.floats(0.05, 10.0))
def test_gaussian_dominates_discrete(pairs, noise):
    d = MassPointDistribution.from_unnormalized([a for a, _ in pairs], [w for _, w in pairs])
    power = float(d.probs @ d.values**2)
    assert mi_discrete_awgn(d, noise) <= gaussian_capacity(power, noise) + 1e-6


# --- amplitude-constrained solver ------------------------------------------

def test_silent_source():
    dist, bits = max_mi_amplitude_constrained(0.0, 1.0)
    assert bits == 0.0
    np.testing.assert_array_equal(dist.values, [0.0])


def test_low_snr_fast_path_is_binary():
    dist, bits = max_mi_amplitude_constrained(0.01, 1.0)
    np.testing.assert_array_equal(dist.values, [-1.0, 1.0])
    assert bits == mi_bpsk_exact(0.01)


def test_high_snr_fast_path_is_uniform():
    dist, bits = max_mi_amplitude_constrained(1e4, 1.0)
    assert len(dist) == 513 and np.allclose(dist.probs, 1 / 513)
    assert bits == pytest.approx(0.5 * math.log2(1 + 2e4 / (math.pi * math.e)), rel=1e-14)


def test_invalid_gain():
    with pytest.raises(ValueError):
        max_mi_amplitude_constrained(-1.0, 1.0)
    with pytest.raises(ValueError):
        smith_solve(float("nan"))


@pytest.mark.parametrize("snr,support", [(1.0, 2), (5.0, 3), (20.0, 5), (40.0, 7)])
def test_general_solver_optimality(snr, support):
    rep = smith_solve(snr, general=True)
    assert rep.support_size == support
    assert rep.support_residual <= DEFAULT_SMITH.kkt_tolerance
    assert rep.grid_excess <= DEFAULT_SMITH.kkt_tolerance
    # symmetric law on [-1, 1]
    np.testing.assert_allclose(rep.dist.values, -rep.dist.values[::-1], atol=1e-12)
    np.testing.assert_allclose(rep.dist.probs, rep.dist.probs[::-1], atol=1e-9)
    assert np.all(np.abs(rep.dist.values) <= 1.0)
    # independent check of the optimality condition on a dense grid
    amp = math.sqrt(snr)
    x = np.linspace(-amp, amp, 801)
    dens = information_density(x, MassPointDistribution(rep.dist.values * amp, rep.dist.probs), 1.0)
    assert dens.max() <= rep.bits + 2e-6
    assert rep.bits == pytest.approx(mi_discrete_awgn(MassPointDistribution(rep.dist.values * amp, rep.dist.probs), 1.0), abs=1e-10)


def _three_point_oracle(amp):
    # best {-amp, 0, amp} law by bounded scalar search, entropy by adaptive quad
    from scipy import integrate, optimize

    def mi(p0):
        q = (1 - p0) / 2

        def f(y):
            py = (q * np.exp(-0.5 * (y - amp) ** 2) + p0 * np.exp(-0.5 * y * y) + q * np.exp(-0.5 * (y + amp) ** 2)) / math.sqrt(2 * math.pi)
            return -py * math.log2(py) if py > 0 else 0.0

        h = integrate.quad(f, -amp - 12, amp + 12, epsabs=1e-13, limit=400, points=[-amp, 0, amp])[0]
        return h - 0.5 * math.log2(2 * math.pi * math.e)

    res = optimize.minimize_scalar(lambda p: -mi(p), bounds=(0, 1), method="bounded", options={"xatol": 1e-9})
    return -res.fun, res.x


def test_smith_against_independent_oracles():
    assert smith_solve(1.0, general=True).bits == pytest.approx(mi_bpsk_exact(1.0), abs=1e-6)
    rep = smith_solve(5.0, general=True)
    bits, p0 = _three_point_oracle(math.sqrt(5.0))
    assert rep.bits == pytest.approx(bits, abs=1e-7)
    assert rep.dist.probs[1] == pytest.approx(p0, abs=1e-4)
    # frozen
    assert rep.bits == pytest.approx(1.0266014957275054, abs=1e-9)
    assert smith_solve(40.0, general=True).bits == pytest.approx(2.008649385136271, abs=1e-8)


def test_support_limit_reported():
    with pytest.raises(SmithConvergenceError) as exc:
        smith_solve(60.0, SmithSolverConfig(max_mass_points=3), general=True)
    assert exc.value.residual > 0


def test_sandwich_bounds():
    for s in (0.02, 0.3, 2.0, 8.0, 40.0):
        v = smith_solve(s).bits
        assert mi_bpsk_exact(s) - 1e-9 <= v <= gaussian_capacity(s, 1.0) + 1e-12


def test_monotone_within_each_regime():
    ac = AmplitudeCapacity()
    general = ac(np.linspace(0.05, 100.0, 25))
    assert np.all(np.diff(general) >= -1e-7)
    high = ac(np.geomspace(100.001, 1e6, 25))
    assert np.all(np.diff(high) > 0)


@pytest.mark.xfail(strict=True, reason="the uniform closed form undershoots the exact optimum by ~0.23 bits at the regime switch")
def test_monotone_across_high_threshold():
    ac = AmplitudeCapacity()
    vals = ac(np.array([99.0, 100.0, 100.0001, 101.0]))
    assert np.all(np.diff(vals) >= -1e-7)


def test_fast_path_consistency_low_threshold():
    s = DEFAULT_SMITH.low_snr_threshold
    assert abs(smith_solve(s, general=True).bits - mi_bpsk_exact(s)) <= 0.01


@pytest.mark.xfail(strict=True, reason="at SNR 100 the general optimum exceeds the uniform closed form by ~0.23 bits")
def test_fast_path_consistency_high_threshold():
    s = DEFAULT_SMITH.high_snr_threshold
    assert abs(smith_solve(s, general=True).bits - mi_uniform_approx(s)) <= 0.01


def test_amplitude_capacity_memoises_and_is_deterministic():
    a, b = AmplitudeCapacity(), AmplitudeCapacity()
    snrs = np.array([3.0, 0.5, 3.0, 12.0])
    va = a(snrs)
    assert va[0] == va[2]
    np.testing.assert_array_equal(va, b(snrs[::-1])[::-1])
