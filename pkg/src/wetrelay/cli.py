"""Command-line entry point.

Exit status: 0 on success, 1 when a solver fails (or a diagnostic residual is
out of tolerance), 2 for usage and configuration errors. Scenario values come
from preset defaults, then the ``--config`` file, then individual flags.
"""

from __future__ import annotations

import argparse
import json
import logging
import math
import os
import sys
import time
from pathlib import Path

from . import __version__
from .battery import CostSolverError, capacity_unlimited_battery, solve_cost_constrained_capacity
from .batteryless import (
    BalanceError,
    BatterylessConfig,
    RelayGridSpec,
    StationarityError,
    capacity_batteryless,
    corollary2_report,
)
from ._conic import ConicSolverError
from .channel import ConfigError, SystemParams, build_normalized_channel
from .mi import QuadratureError, SmithConvergenceError, SmithSolverConfig, smith_solve
from .sweep import PRESETS, SweepConfig, failures, load_preset, run_sweep, write_outputs

EXIT_OK, EXIT_SOLVER, EXIT_USAGE = 0, 1, 2
SOLVER_ERRORS = (SmithConvergenceError, QuadratureError, CostSolverError, BalanceError, StationarityError, ConicSolverError)


class UsageError(Exception):
    pass


def _parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--preset", choices=PRESETS, help="start from a figure preset's scenario")
    common.add_argument("--config", help="JSON scenario (SystemParams fields) or sweep config")
    common.add_argument("--pr", type=float, help="relay power P_R, W")
    common.add_argument("--pc", type=float, help="per-symbol transmission cost P_C, W")
    common.add_argument("--dsr", type=float, help="source-relay distance, m")
    common.add_argument("--drd", type=float, help="relay-destination distance, m")
    common.add_argument("--grid-points", type=int, default=201, help="relay grid size (odd)")
    common.add_argument("--seed", type=int, default=0, help="seed of the solver multistarts")
    common.add_argument("-v", "--verbose", action="store_true")

    p = argparse.ArgumentParser(prog="wetrelay", description="Capacity of a wireless-powered relay link.")
    p.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = p.add_subparsers(dest="command", required=True)

    c = sub.add_parser("capacity", parents=[common], help="capacity of one scenario")
    c.add_argument("--battery", choices=("none", "unlimited", "both"), default="none")
    c.add_argument("--units", choices=("bps", "bpsymbol"), default="bps", help="unit listed first")
    c.add_argument("--show-dists", action="store_true", help="print relay and source laws")

    s = sub.add_parser("sweep", parents=[common], help="parameter sweep to CSV and JSON")
    s.add_argument("--out", required=True, help="CSV path; the JSON goes next to it")
    s.add_argument("--units", choices=("bps", "bpsymbol"))
    s.add_argument("--workers", type=int, help="worker processes (capped by CAP_NUM_THREADS)")

    d = sub.add_parser("diagnose", parents=[common], help="solver residual report")
    d.add_argument("target", choices=("smith", "case3", "cor2", "battery"))
    d.add_argument("--snr", type=float, help="SNR f/sigma^2 for the smith target")
    return p


def _load_doc(path):
    try:
        doc = json.loads(Path(path).read_text())
    except (OSError, json.JSONDecodeError) as exc:
        raise UsageError(f"cannot read config {path}: {exc}") from None
    if not isinstance(doc, dict):
        raise UsageError("config must be a JSON object")
    return doc


def _overrides(args) -> dict:
    out = {}
    for flag, name in (("pr", "P_R"), ("pc", "P_C"), ("dsr", "d_SR"), ("drd", "d_RD")):
        v = getattr(args, flag)
        if v is not None:
            out[name] = v
    return out


def _scenario(args) -> SystemParams:
    """Preset defaults, then the config file, then flags."""
    base = load_preset(args.preset).base.to_dict() if args.preset else SystemParams().to_dict()
    if args.config:
        doc = _load_doc(args.config)
        if "base" in doc:  # a sweep config: use its scenario
            doc = doc["base"]
        given = SystemParams.from_dict(doc).to_dict()
        keys = set(doc) - {"f_c", "noise_dbm_per_hz"}
        keys |= {"f_c_down", "f_c_up"} if "f_c" in doc else set()
        keys |= {"N0"} if "noise_dbm_per_hz" in doc else set()
        base.update({k: given[k] for k in keys})
    base.update(_overrides(args))
    try:
        return SystemParams.from_dict(base)
    except ConfigError as exc:
        raise UsageError(str(exc)) from None


def _grid(args) -> RelayGridSpec:
    try:
        return RelayGridSpec(point_count=args.grid_points)
    except ValueError as exc:
        raise UsageError(str(exc)) from None


def _print_dist(label, dist):
    print(f"{label}:")
    for v, p in dist.pairs():
        print(f"  {v:.12g} {p:.12g}")


def _report(res, units, show):
    lines = [f"capacity: {res.capacity_bits_per_sec:.12g} bits/s", f"capacity: {res.capacity_bits_per_symbol:.12g} bits/symbol"]
    if units == "bpsymbol":
        lines.reverse()
    for ln in lines:
        print(ln)
    print(f"case: {res.case_tag}")
    print(f"bottleneck: {res.bottleneck}")
    if show:
        _print_dist("relay distribution (value prob)" + (" [Gauss-Hermite nodes]" if res.relay_gaussian else ""), res.relay_dist)
        if res.source_dist is not None:
            _print_dist("source distribution", res.source_dist)
        for x, d in res.source_dists.items():
            _print_dist(f"source law given relay {x:.12g} (normalised amplitude)", d)


def cmd_capacity(args) -> int:
    params = _scenario(args)
    grid = _grid(args)
    cfg = BatterylessConfig(smith=SmithSolverConfig(seed=args.seed))
    channel = build_normalized_channel(params)
    results = []
    if args.battery in ("none", "both"):
        results.append(("batteryless", capacity_batteryless(channel, params, grid, cfg)))
    if args.battery in ("unlimited", "both"):
        results.append(("unlimited battery", capacity_unlimited_battery(channel, params)))
    for i, (label, res) in enumerate(results):
        if len(results) > 1:
            print(("" if i == 0 else "\n") + f"[{label}]")
        _report(res, args.units, args.show_dists)
    if len(results) == 2:
        lo, hi = (r.capacity_bits_per_symbol for _, r in results)
        print(f"\nany finite battery: between {lo:.12g} and {hi:.12g} bits/symbol")
    return EXIT_OK


def cmd_sweep(args) -> int:
    if args.config:
        doc = _load_doc(args.config)
        if "swept_variable" not in doc:
            raise UsageError("sweep config needs 'swept_variable' and 'grid'")
        try:
            config = SweepConfig.from_dict(doc)
        except ConfigError as exc:
            raise UsageError(str(exc)) from None
    elif args.preset:
        config = load_preset(args.preset)
    else:
        raise UsageError("sweep needs --preset or --config")
    over = _overrides(args)
    over.pop(config.swept_variable, None)
    changes = {"grid_points": args.grid_points, "seed": args.seed}
    if args.units:
        changes["units"] = "bits_per_sec" if args.units == "bps" else "bits_per_symbol"
    try:
        config = SweepConfig(**{**config.__dict__, **changes, "base": config.base.replace(**over)})
    except ConfigError as exc:
        raise UsageError(str(exc)) from None
    out = Path(args.out)
    for path in (out, out.with_suffix(".json")):
        parent = path.parent if str(path.parent) else Path(".")
        if not parent.is_dir() or not os.access(parent, os.W_OK) or (path.exists() and not os.access(path, os.W_OK)):
            raise UsageError(f"cannot write {path}")
    t0 = time.perf_counter()
    rows = run_sweep(config, workers=args.workers)
    csv_path, json_path = write_outputs(rows, config.columns(), out)
    print(f"rows={len(rows)} failures={failures(rows)} wall={time.perf_counter() - t0:.1f}s csv={csv_path} json={json_path}")
    return EXIT_OK


def _check(label, value, tol):
    ok = value <= tol
    print(f"{label}: {value:.3e} (tolerance {tol:.1e}) {'ok' if ok else 'FAIL'}")
    return ok


def cmd_diagnose(args) -> int:
    params = _scenario(args)
    channel = build_normalized_channel(params)
    smith = SmithSolverConfig(seed=args.seed)
    ok = True
    if args.target == "smith":
        snr = args.snr
        if snr is None:
            from .channel import usable_energy

            snr = usable_energy(math.sqrt(params.P_R), params.eta, channel.h_RS_sq, params.P_C) / channel.sigma_R_sq
        rep = smith_solve(snr, smith, general=True)
        print(f"snr: {snr:.12g}")
        print(f"mutual information: {rep.bits:.12g} bits")
        print(f"support size: {rep.support_size}")
        print(f"symmetric support: {rep.dist.is_symmetric()}")
        print(f"rounds: {rep.rounds}")
        ok &= _check("support residual (bits)", rep.support_residual, smith.kkt_tolerance)
        ok &= _check("off-support excess (bits)", max(rep.grid_excess, 0.0), smith.kkt_tolerance)
    elif args.target == "cor2":
        if not params.P_C > 0:
            print("three-point closed form needs P_C > 0: not applicable")
            return EXIT_OK
        rep = corollary2_report(channel, params)
        print(f"x0: {rep['x0']:.12g} sqrt(W)")
        print(f"lambda: {rep['lambda']:.12g} bits/W")
        print(f"branch: {rep['branch']}")
        for br, x2, r in rep["candidates"]:
            print(f"  candidate {br}: x0^2={x2:.12g} residual={r:.3e}")
        ok &= _check("stationarity residual (bits)", rep["residual"], 1e-8)
    elif args.target == "case3":
        cfg = BatterylessConfig(smith=smith)
        res = capacity_batteryless(channel, params, _grid(args), cfg)
        if res.case_tag != "Case3":
            print(f"case not active: {res.case_tag} fired")
            return EXIT_OK
        d = res.details
        print(f"source-relay rate: {d['source_relay_bits']:.12g} bits")
        print(f"relay-destination rate: {d['relay_destination_bits']:.12g} bits")
        print(f"alpha: {d['alpha']:.6g}  lambda: {d['lambda_bits_per_W']:.6g} bits/W  xi: {d['xi']:.6g}")
        print(f"support size: {len(res.relay_dist)}")
        if d.get("unbalanced"):
            print(f"no balanced law on the grid; bottleneck {res.bottleneck}")
        ok &= _check("balance gap (bits)", d["balance_gap"], cfg.balance_tolerance)
        ok &= _check("stationarity residual (bits)", d["stationarity_residual"], cfg.stationarity_tolerance)
    else:
        budget = params.eta * channel.h_RS_sq * params.P_R
        if not budget > 0:
            print("zero harvest budget: nothing to solve")
            return EXIT_OK
        dist, bits, info = solve_cost_constrained_capacity(channel.sigma_R_sq, budget, params.P_C)
        print(f"mutual information: {bits:.12g} bits")
        print(f"support size: {info['support_size']}")
        print(f"silent-symbol mass: {dist.mass_at(0.0):.12g}")
        print(f"multiplier: {info['multiplier']:.6g} bits/W")
        print(f"cost: {info['cost']:.12g} W (budget {budget:.12g} W)")
        ok &= _check("duality gap (bits)", info["duality_gap_bits"], 1e-7)
        ok &= _check("relative budget error", abs(info["cost"] - budget) / budget, 1e-9)
    return EXIT_OK if ok else EXIT_SOLVER


COMMANDS = {"capacity": cmd_capacity, "sweep": cmd_sweep, "diagnose": cmd_diagnose}


def main(argv=None) -> int:
    try:
        sys.stdout.reconfigure(line_buffering=True)
    except AttributeError:  # pragma: no cover - replaced streams
        pass
    args = _parser().parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING, stream=sys.stderr,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return COMMANDS[args.command](args)
    except (UsageError, ConfigError) as exc:
        print(f"wetrelay: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except SOLVER_ERRORS as exc:
        print(f"wetrelay: solver failure: {exc}", file=sys.stderr)
        return EXIT_SOLVER
