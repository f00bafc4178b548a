"""Physical scenario, path loss and the harvest model of the relay-powered source.

Everything here is in SI units. dBm only shows up when a parameter document
is parsed (``noise_dbm_per_hz``).
"""

from __future__ import annotations

import dataclasses
import json
import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np

SPEED_OF_LIGHT = 299_792_458.0  # m/s


class ConfigError(ValueError):
    """Raised for malformed or physically invalid scenario parameters."""


@dataclass(frozen=True)
class SystemParams:
    """Physical scenario of the relay link.

    Attributes
    ----------
    f_c_down : float
        Carrier of the relay transmit band (relay to source and destination), Hz.
    f_c_up : float
        Carrier of the source to relay band, Hz.
    d_SR, d_RD : float
        Source-relay and relay-destination distances, m.
    alpha : float
        Path-loss exponent.
    eta : float
        Harvest efficiency, 0 < eta < 1.
    P_C : float
        Energy cost of every non-silent source symbol, W.
    P_R : float
        Average relay transmit power, W. Zero is accepted and yields zero rates.
    B : float
        Bandwidth, Hz. Two symbols per second per Hz.
    N0 : float
        Noise power spectral density, W/Hz.
    h_RS_sq : float or None
        Relay-to-source power gain override. ``None`` means reciprocal with
        the source-relay link evaluated at the downlink carrier.
    """

    f_c_down: float = 2.3999e9
    f_c_up: float = 2.4001e9
    d_SR: float = 10.0
    d_RD: float = 200.0
    alpha: float = 3.0
    eta: float = 0.8
    P_C: float = 1e-3
    P_R: float = 1.0
    B: float = 100e3
    N0: float = 1e-19
    h_RS_sq: float | None = None

    def __post_init__(self):
        for name in ("f_c_down", "f_c_up", "d_SR", "d_RD", "B", "N0"):
            v = getattr(self, name)
            if not (isinstance(v, (int, float)) and math.isfinite(v) and v > 0):
                raise ConfigError(f"{name} must be a positive finite number, got {v!r}")
        if not (0 < self.eta < 1):
            raise ConfigError(f"eta must lie in (0, 1), got {self.eta!r}")
        if not (self.P_C >= 0 and math.isfinite(self.P_C)):
            raise ConfigError(f"P_C must be >= 0, got {self.P_C!r}")
        if not (self.P_R >= 0 and math.isfinite(self.P_R)):
            raise ConfigError(f"P_R must be >= 0, got {self.P_R!r}")
        if not (self.alpha >= 2 and math.isfinite(self.alpha)):
            raise ConfigError(f"alpha must be >= 2, got {self.alpha!r}")
        if self.h_RS_sq is not None and not self.h_RS_sq > 0:
            raise ConfigError(f"h_RS_sq must be positive, got {self.h_RS_sq!r}")

    @property
    def noise_power(self) -> float:
        return self.N0 * self.B

    @property
    def symbol_rate(self) -> float:
        """Symbols per second under Nyquist signalling."""
        return 2.0 * self.B

    def replace(self, **changes) -> "SystemParams":
        return dataclasses.replace(self, **changes)

    def to_dict(self) -> dict:
        return dataclasses.asdict(self)

    @classmethod
    def from_dict(cls, doc: dict) -> "SystemParams":
        """Build from a JSON-style mapping.

        Keys mirror the field names. ``noise_dbm_per_hz`` may stand in for
        ``N0``; giving both is an error. ``f_c`` sets both carriers at once.
        """
        if not isinstance(doc, dict):
            raise ConfigError("parameter document must be a JSON object")
        doc = dict(doc)
        names = {f.name for f in dataclasses.fields(cls)}
        if "noise_dbm_per_hz" in doc:
            if "N0" in doc:
                raise ConfigError("give either N0 or noise_dbm_per_hz, not both")
            doc["N0"] = dbm_to_watt(float(doc.pop("noise_dbm_per_hz")))
        if "f_c" in doc:
            f_c = doc.pop("f_c")
            doc.setdefault("f_c_down", f_c)
            doc.setdefault("f_c_up", f_c)
        unknown = set(doc) - names
        if unknown:
            raise ConfigError(f"unknown parameter keys: {sorted(unknown)}")
        try:
            kwargs = {k: (None if v is None else float(v)) for k, v in doc.items()}
        except (TypeError, ValueError) as exc:
            raise ConfigError(f"non-numeric parameter value: {exc}") from None
        return cls(**kwargs)

    @classmethod
    def from_json(cls, path) -> "SystemParams":
        try:
            doc = json.loads(Path(path).read_text())
        except (OSError, json.JSONDecodeError) as exc:
            raise ConfigError(f"cannot read parameter file {path}: {exc}") from None
        return cls.from_dict(doc)


@dataclass(frozen=True)
class NormalizedChannel:
    """Effective unit-gain channel after dividing the outputs by the link gains."""

    sigma_R_sq: float
    sigma_D_sq: float
    h_SR_sq: float
    h_RS_sq: float
    h_RD_sq: float


def dbm_to_watt(dbm: float) -> float:
    return 10.0 ** ((dbm - 30.0) / 10.0)


def path_loss_gain(f_c: float, d: float, alpha: float) -> float:
    """Free-space-style power gain ``(c / (4 pi f_c))**2 * d**-alpha``."""
    if not (f_c > 0 and d > 0):
        raise ConfigError(f"carrier and distance must be positive (f_c={f_c!r}, d={d!r})")
    if alpha < 0:
        raise ConfigError(f"path-loss exponent must be non-negative, got {alpha!r}")
    return (SPEED_OF_LIGHT / (f_c * 4.0 * math.pi)) ** 2 * d ** (-alpha)


def build_normalized_channel(params: SystemParams) -> NormalizedChannel:
    h_sr = path_loss_gain(params.f_c_up, params.d_SR, params.alpha)
    h_rs = params.h_RS_sq
    if h_rs is None:
        h_rs = path_loss_gain(params.f_c_down, params.d_SR, params.alpha)
    h_rd = path_loss_gain(params.f_c_down, params.d_RD, params.alpha)
    n = params.noise_power
    return NormalizedChannel(
        sigma_R_sq=n / h_sr,
        sigma_D_sq=n / h_rd,
        h_SR_sq=h_sr,
        h_RS_sq=h_rs,
        h_RD_sq=h_rd,
    )


def harvest_energy(x_R, eta: float, h_RS_sq: float):
    """Energy collected by the source while the relay sends ``x_R``."""
    x_R = np.asarray(x_R, dtype=float)
    out = eta * h_RS_sq * x_R * x_R
    return float(out) if out.ndim == 0 else out


def usable_energy(x_R, eta: float, h_RS_sq: float, P_C: float):
    """Energy left for the next source symbol after paying the transmission cost.

    This is the squared amplitude bound of the batteryless source. It is
    identically zero wherever the harvest does not cover ``P_C``.
    """
    e = np.asarray(harvest_energy(x_R, eta, h_RS_sq), dtype=float)
    out = np.maximum(0.0, e - P_C)
    return float(out) if out.ndim == 0 else out
