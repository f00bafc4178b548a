"""Capacity of a relay link whose source is powered by the relay's own signal.

The relay both forwards data and, through its transmissions, charges an
energy-harvesting source. The package evaluates the capacity for a
batteryless source and for one with an unlimited battery, the three
reference schemes used for comparison, and parameter sweeps over them.
"""

__version__ = "0.1.0"

from .battery import CostConstrainedConfig, capacity_unlimited_battery, solve_cost_constrained_capacity, source_symbol_cost
from .batteryless import (
    BatterylessConfig,
    CodingPlan,
    RelayGridSpec,
    avg_sr_mi,
    capacity_batteryless,
    check_case2,
    corollary2_x0_lambda,
    rate_allocation,
    solve_case1,
    solve_case3,
)
from .benchmarks import benchmark1_rate, benchmark2_rate, benchmark3_rate
from .channel import ConfigError, NormalizedChannel, SystemParams, build_normalized_channel, usable_energy
from .lambertw import lambert_w
from .mi import (
    AmplitudeCapacity,
    MassPointDistribution,
    QuadratureSpec,
    SmithSolverConfig,
    gaussian_capacity,
    max_mi_amplitude_constrained,
    mi_bpsk_exact,
    mi_discrete_awgn,
    mi_uniform_approx,
    smith_solve,
)
from .results import CapacityResult
from .sweep import SweepConfig, load_preset, run_sweep

__all__ = [
    "AmplitudeCapacity", "BatterylessConfig", "CapacityResult", "CodingPlan", "ConfigError",
    "CostConstrainedConfig", "MassPointDistribution", "NormalizedChannel", "QuadratureSpec",
    "RelayGridSpec", "SmithSolverConfig", "SweepConfig", "SystemParams", "avg_sr_mi",
    "benchmark1_rate", "benchmark2_rate", "benchmark3_rate", "build_normalized_channel",
    "capacity_batteryless", "capacity_unlimited_battery", "check_case2", "corollary2_x0_lambda",
    "gaussian_capacity", "lambert_w", "load_preset", "max_mi_amplitude_constrained",
    "mi_bpsk_exact", "mi_discrete_awgn", "mi_uniform_approx", "rate_allocation", "run_sweep",
    "smith_solve", "solve_case1", "solve_case3", "solve_cost_constrained_capacity",
    "source_symbol_cost", "usable_energy",
]
