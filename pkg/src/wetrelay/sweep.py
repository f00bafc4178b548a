"""Parameter sweeps over the capacities and benchmark rates.

Each grid value (and each variant of the base parameters) is an independent
cell, so cells can be fanned out to worker processes; rows are always
assembled in grid order and formatted to 12 significant digits, which keeps
the output byte-identical whatever the worker count.
"""

from __future__ import annotations

import csv
import io
import json
import logging
import math
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .battery import capacity_unlimited_battery
from .batteryless import BatterylessConfig, RelayGridSpec, capacity_batteryless
from .benchmarks import benchmark1_rate, benchmark2_rate, benchmark3_rate
from .channel import ConfigError, SystemParams, build_normalized_channel
from .mi import QuadratureSpec, SmithSolverConfig

log = logging.getLogger(__name__)

QUANTITIES = ("cap_batteryless", "cap_unlimited", "bench1", "bench2", "bench3")
SWEPT = ("P_R", "d_SR", "P_C")
UNITS = ("bits_per_symbol", "bits_per_sec")
PRESETS = ("fig3", "fig3a", "fig4")


@dataclass(frozen=True)
class SweepConfig:
    """One sweep: a base scenario, the swept field and its grid, and what to compute.

    ``variants`` is a tuple of ``(label, overrides)`` pairs; every quantity is
    evaluated once per variant and the columns are suffixed ``@label``.
    """

    base: SystemParams
    swept_variable: str
    grid: tuple
    quantities: tuple = QUANTITIES
    variants: tuple = ()
    units: str = "bits_per_sec"
    grid_points: int = 201
    seed: int = 0

    def __post_init__(self):
        if self.swept_variable not in SWEPT:
            raise ConfigError(f"swept_variable must be one of {SWEPT}")
        g = tuple(float(v) for v in self.grid)
        if not g:
            raise ConfigError("empty sweep grid")
        if any(b <= a for a, b in zip(g, g[1:])):
            raise ConfigError("sweep grid must be strictly increasing")
        object.__setattr__(self, "grid", g)
        q = tuple(self.quantities)
        if not q or any(x not in QUANTITIES for x in q) or len(set(q)) != len(q):
            raise ConfigError(f"quantities must be a non-empty subset of {QUANTITIES}")
        object.__setattr__(self, "quantities", q)
        if self.units not in UNITS:
            raise ConfigError(f"units must be one of {UNITS}")
        variants = tuple((str(lbl), dict(ov)) for lbl, ov in self.variants)
        object.__setattr__(self, "variants", variants)
        for _, ov in variants:
            try:
                self.base.replace(**ov)  # validates field names and values
            except TypeError as exc:
                raise ConfigError(f"bad variant override: {exc}") from None

    def columns(self) -> list:
        labels = [lbl for lbl, _ in self.variants] or [None]
        tag = lambda name, lbl: name if lbl is None else f"{name}@{lbl}"
        cols = ["swept_value"]
        cols += [tag(q, lbl) for lbl in labels for q in self.quantities]
        cols += [tag("case_tag", lbl) for lbl in labels]
        cols += [tag("bottleneck", lbl) for lbl in labels]
        return cols

    @classmethod
    def from_dict(cls, doc: dict) -> "SweepConfig":
        doc = dict(doc)
        try:
            base = SystemParams.from_dict(doc.pop("base", {}))
            grid = doc.pop("grid")
            if isinstance(grid, dict):
                grid = make_grid(**grid)
            return cls(base=base, grid=tuple(grid), **doc)
        except (KeyError, TypeError) as exc:
            raise ConfigError(f"bad sweep config: {exc}") from exc

    @classmethod
    def from_json(cls, path) -> "SweepConfig":
        try:
            doc = json.loads(Path(path).read_text())
        except (OSError, json.JSONDecodeError) as exc:
            raise ConfigError(f"cannot read sweep config {path}: {exc}") from exc
        if not isinstance(doc, dict):
            raise ConfigError("sweep config must be a JSON object")
        return cls.from_dict(doc)


def make_grid(start: float, stop: float, num: int, spacing: str = "log") -> tuple:
    if spacing == "log":
        if not (start > 0 and stop > start):
            raise ConfigError("log grid needs 0 < start < stop")
        return tuple(np.logspace(math.log10(start), math.log10(stop), int(num)).tolist())
    if spacing == "linear":
        return tuple(np.linspace(start, stop, int(num)).tolist())
    raise ConfigError(f"unknown grid spacing {spacing!r}")


def load_preset(name: str) -> SweepConfig:
    """Figure presets: P_R from 10 mW to 5 W, 20 log-spaced points, output in bit/s."""
    if name not in PRESETS:
        raise ConfigError(f"unknown preset {name!r}; expected one of {PRESETS}")
    grid = make_grid(0.01, 5.0, 20)
    if name == "fig3":
        return SweepConfig(SystemParams(d_SR=10.0), "P_R", grid)
    if name == "fig3a":
        return SweepConfig(SystemParams(d_SR=20.0), "P_R", grid)
    return SweepConfig(
        SystemParams(d_SR=10.0), "P_R", grid,
        quantities=("cap_batteryless", "cap_unlimited"),
        variants=(("P_C=0", {"P_C": 0.0}), ("P_C=1mW", {"P_C": 1e-3})),
    )


def _fmt(v) -> str:
    if isinstance(v, str):
        return v
    return format(float(v), ".12g")


def _cell(args):
    """Evaluate every quantity at one scenario; errors become cells."""
    params, quantities, grid_points, seed = args
    smith = SmithSolverConfig(seed=seed)
    cfg = BatterylessConfig(smith=smith, quad=QuadratureSpec())
    out = {}
    try:
        channel = build_normalized_channel(params)
    except ConfigError as exc:
        err = f"error:{type(exc).__name__}"
        return {**{q: err for q in quantities}, "case_tag": err, "bottleneck": err}
    tag = bottleneck = ""
    for q in quantities:
        try:
            if q == "cap_batteryless":
                res = capacity_batteryless(channel, params, RelayGridSpec(point_count=grid_points), cfg)
                out[q] = res.capacity_bits_per_symbol
                tag, bottleneck = res.case_tag, res.bottleneck
            elif q == "cap_unlimited":
                res = capacity_unlimited_battery(channel, params)
                out[q] = res.capacity_bits_per_symbol
                if not tag:
                    tag, bottleneck = res.case_tag, res.bottleneck
            elif q == "bench1":
                out[q] = benchmark1_rate(channel, params, smith=smith)
            elif q == "bench2":
                out[q] = benchmark2_rate(channel, params)
            else:
                out[q] = benchmark3_rate(channel, params)
        except Exception as exc:  # noqa: BLE001 - a failed cell must not end the sweep
            log.warning("cell %s failed at %s: %s", q, params, exc)
            out[q] = f"error:{type(exc).__name__}"
    out["case_tag"] = tag or "-"
    out["bottleneck"] = bottleneck or "-"
    return out


def worker_count(requested: int | None = None) -> int:
    env = os.environ.get("CAP_NUM_THREADS")
    n = requested or (int(env) if env else os.cpu_count() or 1)
    if env:
        n = min(n, int(env))
    return max(1, n)


def run_sweep(config: SweepConfig, workers: int | None = None) -> list:
    """Evaluate the sweep; returns rows (dicts keyed by :meth:`SweepConfig.columns`) in grid order.

    Numeric cells are floats in the configured units; failed cells hold
    ``"error:<ExceptionType>"``.
    """
    variants = config.variants or ((None, {}),)
    jobs = []
    for v in config.grid:
        for _, ov in variants:
            params = config.base.replace(**{**ov, config.swept_variable: v})
            jobs.append((params, config.quantities, config.grid_points, config.seed))
    n = min(worker_count(workers), len(jobs))
    if n > 1:
        with ProcessPoolExecutor(max_workers=n) as pool:
            cells = list(pool.map(_cell, jobs))
    else:
        cells = [_cell(j) for j in jobs]
    rows = []
    it = iter(zip(jobs, cells))
    for v in config.grid:
        row = {"swept_value": v}
        for lbl, _ in variants:
            (params, *_), cell = next(it)
            sfx = "" if lbl is None else f"@{lbl}"
            rate = params.symbol_rate if config.units == "bits_per_sec" else 1.0
            for q in config.quantities:
                val = cell[q]
                row[q + sfx] = val if isinstance(val, str) else val * rate
            row["case_tag" + sfx] = cell["case_tag"]
            row["bottleneck" + sfx] = cell["bottleneck"]
        rows.append({c: row[c] for c in config.columns()})
    return rows


def failures(rows) -> int:
    return sum(1 for r in rows for v in r.values() if isinstance(v, str) and v.startswith("error:"))


def to_csv(rows, columns) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(columns)
    for r in rows:
        w.writerow([_fmt(r[c]) for c in columns])
    return buf.getvalue()


def to_json(rows, columns) -> str:
    def conv(v):
        return v if isinstance(v, str) else float(_fmt(v))

    return json.dumps([{c: conv(r[c]) for c in columns} for r in rows], indent=1) + "\n"


def write_outputs(rows, columns, csv_path) -> tuple:
    """Write ``csv_path`` and the matching ``.json`` next to it; returns both paths."""
    csv_path = Path(csv_path)
    json_path = csv_path.with_suffix(".json")
    csv_path.write_text(to_csv(rows, columns))
    json_path.write_text(to_json(rows, columns))
    return csv_path, json_path
