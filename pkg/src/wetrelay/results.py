"""Result records shared by the capacity modules."""

from __future__ import annotations

from dataclasses import dataclass, field

from .mi import MassPointDistribution

CASE_TAGS = ("Case1", "Case2", "Case3", "Cor2Case1", "Cor2Case2", "Unlimited")
BOTTLENECKS = ("source-relay", "relay-destination", "balanced")


@dataclass
class CapacityResult:
    """Capacity of one scenario together with the distributions that attain it.

    ``source_dists`` maps relay amplitudes to the conditional source law over
    the normalised amplitude ``v`` in [-1, 1] (batteryless mode). With an
    unlimited battery the source law does not depend on the relay symbol and
    lives in ``source_dist`` instead, in volts-like units of sqrt(W).
    ``relay_gaussian`` flags a relay law that is really Gaussian; ``relay_dist``
    then holds a moment-matched Gauss-Hermite discretisation of it.
    """

    capacity_bits_per_symbol: float
    capacity_bits_per_sec: float
    case_tag: str
    relay_dist: MassPointDistribution
    bottleneck: str
    source_dists: dict = field(default_factory=dict)
    source_dist: MassPointDistribution | None = None
    relay_gaussian: bool = False
    details: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.case_tag not in CASE_TAGS:
            raise ValueError(f"unknown case tag {self.case_tag!r}")
        if self.bottleneck not in BOTTLENECKS:
            raise ValueError(f"unknown bottleneck {self.bottleneck!r}")

    @classmethod
    def build(cls, bits: float, symbol_rate: float, **kw) -> "CapacityResult":
        bits = float(max(bits, 0.0))
        return cls(capacity_bits_per_symbol=bits, capacity_bits_per_sec=symbol_rate * bits, **kw)
