"""Command-line front end: ``coophybrid {run,sweep,beam-pattern,validate,ofdm-run}``."""

from __future__ import annotations

import argparse
import csv
import json
import logging
import math
import os
import sys

import numpy as np
import yaml

from . import montecarlo, silence, validation
from .analog import analog_precoders, beam_pattern, main_lobes
from .channel_model import ChannelSet, draw_channel, pair_rng
from .power import TABLE1, HardwareProfile

log = logging.getLogger("coophybrid")

EXIT_OK, EXIT_CONFIG, EXIT_RUNTIME, EXIT_VALIDATION = 0, 1, 2, 3
REQUIRED = ("n_bs", "n_users", "n_antennas", "n_rf", "architecture", "target")
SCENARIO_KEYS = {
    "n_bs", "n_users", "n_antennas", "n_rf", "architecture", "target", "blockage", "realizations",
    "seed", "area", "mode", "noise_dbm", "carrier_hz", "bs_positions",
}
PRESETS = {"table1": TABLE1}


class ConfigError(Exception):
    pass


def load_config(path, preset=None) -> dict:
    try:
        with open(path) as f:
            cfg = yaml.safe_load(f)
    except OSError as exc:
        raise ConfigError(f"cannot read config: {exc}") from None
    except yaml.YAMLError as exc:
        raise ConfigError(f"config is not valid YAML: {exc}") from None
    if not isinstance(cfg, dict) or not isinstance(cfg.get("scenario"), dict):
        raise ConfigError("missing required section: scenario")
    if preset is not None:
        cfg["preset"] = preset
    return cfg


def build_scenario(cfg: dict, seed=None, require=REQUIRED) -> montecarlo.Scenario:
    sc = dict(cfg["scenario"])
    for key in require:
        if key not in sc:
            raise ConfigError(f"missing required field: scenario.{key}")
    unknown = set(sc) - SCENARIO_KEYS
    if unknown:
        raise ConfigError(f"unknown field: scenario.{sorted(unknown)[0]}")
    preset = cfg.get("preset")
    if preset is not None and preset not in PRESETS:
        raise ConfigError(f"unknown preset: {preset}")
    hw = dict(cfg.get("hardware") or {})
    base = PRESETS.get(preset, TABLE1).as_dict()
    bad = set(hw) - set(base)
    if bad:
        raise ConfigError(f"unknown field: hardware.{sorted(bad)[0]}")
    base.update(hw)
    ofdm_cfg = cfg.get("ofdm") or {}
    if seed is not None:
        sc["seed"] = seed
    try:
        return montecarlo.Scenario(
            profile=HardwareProfile(**base),
            n_subcarriers=ofdm_cfg.get("n_subcarriers"),
            per_subcarrier_hw=bool(ofdm_cfg.get("per_subcarrier_hw", False)),
            **sc,
        )
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"invalid scenario: {exc}") from None


def _echo(cfg, sc_list, axis=None, values=None) -> dict:
    return {
        "config": cfg,
        "scenario": sc_list[0].to_dict(),
        "sweep": {"axis": axis, "values": list(values)} if axis else None,
    }


def cmd_run(args) -> int:
    cfg = load_config(args.config, args.preset)
    sc = build_scenario(cfg, args.seed)
    if args.ofdm and sc.n_subcarriers is None:
        sc = sc.replace(n_subcarriers=64)
    out = args.out or cfg.get("output") or "out"
    res = montecarlo.run(sc, args.workers)
    montecarlo.export([res], out, realizations_log=args.realizations_log, config=_echo(cfg, [sc]))
    _summary([res])
    return EXIT_OK


def cmd_sweep(args) -> int:
    cfg = load_config(args.config, args.preset)
    sw = cfg.get("sweep")
    if not isinstance(sw, dict) or "axis" not in sw or "values" not in sw:
        raise ConfigError("missing required section: sweep (with axis and values)")
    axis, values = sw["axis"], list(sw["values"])
    if axis not in SCENARIO_KEYS:
        raise ConfigError(f"unknown sweep axis: {axis}")
    sc = build_scenario(cfg, args.seed, require=[k for k in REQUIRED if k != axis])
    points = []
    for v in values:
        try:
            points.append(sc.replace(**{axis: v}))
        except ValueError as exc:
            raise ConfigError(f"invalid sweep value {axis}={v}: {exc}") from None
    out = args.out or cfg.get("output") or "out"
    results = [montecarlo.run(p, args.workers) for p in points]
    montecarlo.export(results, out, axis=axis, realizations_log=args.realizations_log, config=_echo(cfg, points, axis, values))
    _summary(results, axis)
    return EXIT_OK


def _summary(results, axis=None):
    for r in results:
        m = r.metrics
        head = f"{axis}={getattr(r.scenario, axis)} " if axis else ""
        print(
            f"{head}feasible {m.n_feasible}/{m.realizations}  P_tx {m.mean_tx_power:.4g} W  "
            f"P_total {m.mean_total_power:.4g} W  infeasible {m.infeasibility_prob:.3f}  joint {m.joint_prob:.3f}"
        )


def beam_channels(sc: montecarlo.Scenario, aods_deg, realization: int) -> ChannelSet:
    """Users pinned to fixed AODs (every ray of every cluster) as seen from each BS."""
    pos = sc.positions()
    users = montecarlo.drop_users(sc.n_users, sc.area, montecarlo.user_rng(sc.seed, realization))
    chans = [[None] * sc.n_bs for _ in range(sc.n_users)]
    los = np.zeros((sc.n_users, sc.n_bs), bool)
    rho = np.zeros((sc.n_users, sc.n_bs))
    for k in range(sc.n_users):
        theta = math.radians(aods_deg[k % len(aods_deg)])
        for m in range(sc.n_bs):
            rng = pair_rng(sc.seed, realization, k, m)
            angles = np.full((sc.cluster.n_clusters, sc.cluster.n_rays), theta)
            chans[k][m], los[k, m], rho[k, m] = draw_channel(pos[m], users[k], sc.n_antennas, sc.cluster, sc.path_loss(), rng, angles=angles)
    return ChannelSet(chans, los, rho)


def cmd_beam_pattern(args) -> int:
    cfg = load_config(args.config, args.preset)
    bcfg = cfg.get("beam") or {}
    aods = list(bcfg.get("aods_deg", [-60, -30, 30, 60]))
    archs = list(bcfg.get("architectures", ["FDP", "FHP", "PHP"]))
    n_grid = int(bcfg.get("grid_points", 3601))
    cfg["scenario"].setdefault("architecture", "FHP")
    sc = build_scenario(cfg, args.seed)
    grid = np.linspace(-np.pi / 2, np.pi / 2, n_grid)
    out = args.out or cfg.get("output") or "out"
    os.makedirs(out, exist_ok=True)
    for r in range(int(bcfg.get("max_attempts", 50))):
        chans = beam_channels(sc, aods, r)
        sols = {}
        for arch in archs:
            s = sc.replace(architecture=arch, n_rf=sc.n_rf if arch != "FDP" else sc.n_antennas)
            res = silence.all_active(chans, analog_precoders(chans, arch, s.n_rf), s.target, s.noise, s.stations())
            if not res.feasible:
                break
            sols[arch] = res
        if len(sols) == len(archs):
            break
    else:
        print("no realization feasible for every architecture", file=sys.stderr)
        return EXIT_RUNTIME
    lobes = {}
    for arch, res in sols.items():
        for m in range(sc.n_bs):
            W = np.column_stack([res.weights[k][m] for k in range(sc.n_users)])
            if not np.any(W):
                log.info("BS %d carries no power under %s; pattern skipped", m + 1, arch)
                continue
            pat = beam_pattern(W, grid)
            lobes[(arch, m)] = float(np.degrees(main_lobes(pat, grid, 1)[0]))
            with open(os.path.join(out, f"beam_bs{m + 1}_{arch}.csv"), "w", newline="") as f:
                w = csv.writer(f)
                w.writerow(["angle_deg", "gain_db"])
                for t, g in zip(np.degrees(grid), pat):
                    w.writerow([repr(float(t)), repr(float(g))])
    with open(os.path.join(out, "config.json"), "w") as f:
        json.dump({"config": cfg, "scenario": sc.to_dict(), "realization": r, "main_lobes_deg": {f"{a}/bs{m + 1}": v for (a, m), v in lobes.items()}}, f, indent=2)
    for (arch, m), v in sorted(lobes.items()):
        print(f"BS{m + 1} {arch}: main lobe {v:+.2f} deg")
    return EXIT_OK


def cmd_validate(args) -> int:
    checks = validation.run_all(args.mutate)
    for c in checks:
        print(f"{'PASS' if c.passed else 'FAIL'}  {c.name}: {c.detail}")
    return EXIT_OK if all(c.passed for c in checks) else EXIT_VALIDATION


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="coophybrid", description=__doc__)
    p.add_argument("-v", "--verbose", action="count", default=0)
    sub = p.add_subparsers(dest="command", required=True)

    def common(sp, config_required=True):
        sp.add_argument("--config", required=config_required, help="YAML scenario file")
        sp.add_argument("--seed", type=int, help="override the master seed")
        sp.add_argument("--workers", type=int, default=1)
        sp.add_argument("--out", help="output directory")
        sp.add_argument("--preset", choices=sorted(PRESETS), help="hardware constants preset")
        sp.add_argument("--realizations-log", action="store_true", help="write realizations.jsonl")

    sp = sub.add_parser("run", help="one scenario")
    common(sp)
    sp.set_defaults(func=cmd_run, ofdm=False)
    sp = sub.add_parser("ofdm-run", help="one OFDM scenario (64 subcarriers unless configured)")
    common(sp)
    sp.set_defaults(func=cmd_run, ofdm=True)
    sp = sub.add_parser("sweep", help="scenario swept along one axis")
    common(sp)
    sp.set_defaults(func=cmd_sweep)
    sp = sub.add_parser("beam-pattern", help="per-BS beam patterns for fixed AODs")
    common(sp)
    sp.set_defaults(func=cmd_beam_pattern)
    sp = sub.add_parser("validate", help="oracle and property checks")
    sp.add_argument("--mutate", choices=sorted(validation.MUTATIONS), help=argparse.SUPPRESS)
    sp.set_defaults(func=cmd_validate)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.WARNING - 10 * min(args.verbose, 2), format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (OSError, RuntimeError, ArithmeticError, ValueError) as exc:
        print(f"runtime error: {exc}", file=sys.stderr)
        return EXIT_RUNTIME


if __name__ == "__main__":
    sys.exit(main())
