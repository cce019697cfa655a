"""Scenario definition, realization loop and metric aggregation."""

from __future__ import annotations

import csv
import dataclasses
import json
import logging
import math
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from . import ofdm, silence
from .analog import Architecture, analog_precoders
from .channel_model import SPEED_OF_LIGHT, ClusterParams, PathLossParams, draw_channel_set
from .power import BaseStation, HardwareProfile, dbm_to_watt
from .sdp import INFEASIBLE, NUMERICAL_FAILURE, OPTIMAL

log = logging.getLogger(__name__)

LAYOUTS = {
    1: [(0.0, 0.0)],
    2: [(-50.0, 0.0), (50.0, 0.0)],
    3: [(-50.0, 0.0), (50.0, 0.0), (0.0, 50.0)],
    4: [(-50.0, -50.0), (50.0, -50.0), (-50.0, 50.0), (50.0, 50.0)],
    5: [(-50.0, -50.0), (50.0, -50.0), (-50.0, 50.0), (50.0, 50.0), (0.0, 0.0)],
}


def place_bs(n_bs: int) -> np.ndarray:
    if n_bs not in LAYOUTS:
        raise ValueError(f"no default layout for {n_bs} BSs (1..5); pass explicit positions")
    return np.array(LAYOUTS[n_bs])


def drop_users(n_users: int, area: float, rng: np.random.Generator) -> np.ndarray:
    """Uniform positions over a square of side ``area`` centred on the origin."""
    if n_users < 1:
        raise ValueError("need at least one user")
    half = area / 2.0
    return rng.uniform(-half, half, size=(n_users, 2))


def user_rng(seed: int, realization: int) -> np.random.Generator:
    return np.random.default_rng(np.random.SeedSequence([seed, realization, 0]))


@dataclass
class Scenario:
    n_bs: int = 2
    n_users: int = 4
    n_antennas: int = 64
    n_rf: int = 4
    architecture: str = "FHP"
    target: float = 4.0
    blockage: float = 0.01
    realizations: int = 500
    seed: int = 0
    area: float = 200.0
    mode: str = "algorithm1"
    noise_dbm: float = -84.0
    profile: HardwareProfile = field(default_factory=HardwareProfile)
    cluster: ClusterParams = field(default_factory=ClusterParams)
    carrier_hz: float = 28e9
    bs_positions: list | None = None
    n_subcarriers: int | None = None
    per_subcarrier_hw: bool = False

    def __post_init__(self):
        self.architecture = Architecture.parse(self.architecture).value
        if self.architecture == "FDP":
            self.n_rf = self.n_antennas
        if self.realizations < 1:
            raise ValueError("realizations must be at least 1")
        if self.mode not in ofdm.MODES:
            raise ValueError(f"mode must be one of {', '.join(ofdm.MODES)}")
        if self.n_users < 1:
            raise ValueError("n_users must be at least 1")
        if self.n_subcarriers is not None and self.n_subcarriers < 1:
            raise ValueError("n_subcarriers must be at least 1")
        if self.bs_positions is not None:
            pos = np.asarray(self.bs_positions, float)
            if pos.shape != (self.n_bs, 2):
                raise ValueError("bs_positions must list one (x, y) pair per BS")
        elif self.n_bs not in LAYOUTS:
            raise ValueError(f"n_bs={self.n_bs} needs explicit bs_positions")
        if np.any(np.asarray(self.target, float) < 0):
            raise ValueError("targets must be non-negative")
        self.stations()  # architecture checks

    def stations(self) -> list[BaseStation]:
        return [BaseStation.make(self.architecture, self.n_antennas, self.n_rf, self.profile)] * self.n_bs

    def positions(self) -> np.ndarray:
        return np.asarray(self.bs_positions, float) if self.bs_positions is not None else place_bs(self.n_bs)

    def path_loss(self) -> PathLossParams:
        return PathLossParams(wavelength=SPEED_OF_LIGHT / self.carrier_hz, blockage_beta=self.blockage)

    @property
    def noise(self) -> float:
        return dbm_to_watt(self.noise_dbm)

    def to_dict(self) -> dict:
        d = dataclasses.asdict(self)
        d["target"] = np.asarray(self.target).tolist()
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "Scenario":
        d = dict(d)
        if isinstance(d.get("profile"), dict):
            d["profile"] = HardwareProfile(**d["profile"])
        if isinstance(d.get("cluster"), dict):
            d["cluster"] = ClusterParams(**d["cluster"])
        return cls(**d)

    def replace(self, **changes) -> "Scenario":
        return dataclasses.replace(self, **changes)


def realization_channels(sc: Scenario, r: int):
    users = drop_users(sc.n_users, sc.area, user_rng(sc.seed, r))
    return draw_channel_set(
        sc.positions(), users, sc.n_antennas, sc.cluster, sc.path_loss(), sc.seed, realization=r, n_subcarriers=sc.n_subcarriers
    )


def run_realization(sc: Scenario, r: int) -> dict:
    """Drop, draw, precode and solve one realization; returns a JSON-ready record."""
    chans = realization_channels(sc, r)
    stations = sc.stations()
    rec = {"realization": r}
    if sc.n_subcarriers is not None:
        res = ofdm.solve_ofdm(chans, sc.architecture, sc.n_rf, sc.target, sc.noise, stations, sc.mode, sc.per_subcarrier_hw)
        statuses = [x.status for x in res.results]
        if all(s == OPTIMAL for s in statuses):
            status = OPTIMAL
        elif NUMERICAL_FAILURE in statuses:
            status = NUMERICAL_FAILURE
        else:
            status = INFEASIBLE
        rec.update(
            status=status,
            subcarrier_status=statuses,
            per_bs_tx=res.per_bs_tx.tolist(),
            p_tx=float(res.per_bs_tx.sum()),
            p_total=res.sum_power,
            pattern=res.active.astype(int).tolist(),
            sum_rate=res.sum_rate,
            energy_efficiency=res.energy_efficiency,
            iterations=sum(x.iterations for x in res.results),
            joint=[],
        )
        return rec
    analog = analog_precoders(chans, sc.architecture, sc.n_rf)
    res = ofdm.run_mode(sc.mode, chans, analog, sc.target, sc.noise, stations)
    rec["status"] = res.status
    rec["iterations"] = res.iterations
    if res.feasible:
        rec.update(
            pattern=res.pattern.tolist(),
            per_bs_tx=res.per_bs_tx.tolist(),
            p_tx=res.p_tx_star,
            p_total=res.p_star,
            objective=res.objective,
            rates=res.rates.tolist(),
            joint=res.association["joint"],
            user_bs=res.association["user_bs"],
            rank_ratio=res.rank_ratio,
        )
        if sc.mode == "algorithm2":
            rec["p_sub"] = res.p_star_sub
    return rec


@dataclass
class Metrics:
    realizations: int
    n_feasible: int
    n_infeasible: int
    n_failed: int
    infeasibility_prob: float
    failure_rate: float
    mean_tx_power: float
    mean_total_power: float
    joint_prob: float
    activation_prob: float
    mean_iterations: float
    energy_efficiency: float
    cdf_all: list = field(default_factory=list)  # per-BS RF power samples, all BSs (sorted)
    cdf_active: list = field(default_factory=list)  # active BSs only (sorted)

    SCALARS = (
        "realizations",
        "n_feasible",
        "n_infeasible",
        "n_failed",
        "infeasibility_prob",
        "failure_rate",
        "mean_tx_power",
        "mean_total_power",
        "joint_prob",
        "activation_prob",
        "mean_iterations",
        "energy_efficiency",
    )

    def scalars(self) -> dict:
        return {k: getattr(self, k) for k in self.SCALARS}

    def to_dict(self) -> dict:
        return dataclasses.asdict(self)

    @classmethod
    def from_dict(cls, d: dict) -> "Metrics":
        return cls(**d)


def _mean(xs) -> float:
    return float(np.mean(xs)) if len(xs) else math.nan


def aggregate(records: list[dict]) -> Metrics:
    """Order-independent reduction (records are sorted by realization first)."""
    records = sorted(records, key=lambda r: r["realization"])
    ok = [r for r in records if r["status"] == OPTIMAL]
    n_inf = sum(r["status"] == INFEASIBLE for r in records)
    n_fail = sum(r["status"] == NUMERICAL_FAILURE for r in records)
    decided = len(ok) + n_inf
    joint = [j for r in ok for j in r.get("joint", [])]
    pattern = [z for r in ok for z in r["pattern"]]
    tx_all = sorted(p for r in ok for p in r["per_bs_tx"])
    tx_active = sorted(p for r in ok for p, z in zip(r["per_bs_tx"], r["pattern"]) if z)
    ee = [r["energy_efficiency"] for r in ok if "energy_efficiency" in r]
    return Metrics(
        realizations=len(records),
        n_feasible=len(ok),
        n_infeasible=n_inf,
        n_failed=n_fail,
        infeasibility_prob=n_inf / decided if decided else math.nan,
        failure_rate=n_fail / len(records) if records else math.nan,
        mean_tx_power=_mean([r["p_tx"] for r in ok]),
        mean_total_power=_mean([r["p_total"] for r in ok]),
        joint_prob=_mean([float(j) for j in joint]),
        activation_prob=_mean([float(z) for z in pattern]),
        mean_iterations=_mean([r["iterations"] for r in ok]),
        energy_efficiency=_mean(ee),
        cdf_all=tx_all,
        cdf_active=tx_active,
    )


@dataclass
class RunResult:
    scenario: Scenario
    metrics: Metrics
    records: list


def _worker(args):
    sc, r = args
    return run_realization(sc, r)


def run(sc: Scenario, workers: int = 1) -> RunResult:
    """All realizations of one scenario; identical output for any worker count."""
    jobs = [(sc, r) for r in range(sc.realizations)]
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as ex:
            records = list(ex.map(_worker, jobs, chunksize=max(1, len(jobs) // (4 * workers))))
    else:
        records = [_worker(j) for j in jobs]
    m = aggregate(records)
    if m.failure_rate > 0.01:
        log.warning("numerical-failure rate %.2f%% exceeds 1%%", 100 * m.failure_rate)
    return RunResult(sc, m, records)


def sweep(sc: Scenario, axis: str, values, workers: int = 1) -> list[RunResult]:
    if not hasattr(sc, axis):
        raise ValueError(f"unknown sweep axis {axis!r}")
    return [run(sc.replace(**{axis: v}), workers) for v in values]


def _fmt(x) -> str:
    return repr(float(x)) if isinstance(x, (float, np.floating)) else str(x)


def write_metrics_csv(path, rows: list[tuple[dict, Metrics]]) -> None:
    """One row per sweep point; ``rows`` pairs the point's axis values with its metrics."""
    keys = list(rows[0][0].keys()) if rows else []
    with open(path, "w", newline="") as f:
        w = csv.writer(f)
        w.writerow(keys + list(Metrics.SCALARS))
        for point, m in rows:
            w.writerow([_fmt(point[k]) for k in keys] + [_fmt(v) for v in m.scalars().values()])


def write_cdf(path, samples) -> None:
    n = len(samples)
    with open(path, "w", newline="") as f:
        w = csv.writer(f)
        w.writerow(["watts", "cumulative_fraction"])
        for i, x in enumerate(sorted(samples)):
            w.writerow([repr(float(x)), repr((i + 1) / n)])


def export(results: list[RunResult], out_dir, axis: str | None = None, realizations_log: bool = False, config: dict | None = None) -> None:
    os.makedirs(out_dir, exist_ok=True)
    with open(os.path.join(out_dir, "config.json"), "w") as f:
        json.dump(config if config is not None else results[0].scenario.to_dict(), f, indent=2, sort_keys=True)
    rows = []
    for i, res in enumerate(results):
        point = {axis: getattr(res.scenario, axis)} if axis else {}
        rows.append((point, res.metrics))
        tag = f"_{axis}_{_fmt(point[axis])}" if axis else ""
        write_cdf(os.path.join(out_dir, f"cdf{tag}_all.csv"), res.metrics.cdf_all)
        write_cdf(os.path.join(out_dir, f"cdf{tag}_active.csv"), res.metrics.cdf_active)
    write_metrics_csv(os.path.join(out_dir, "metrics.csv"), rows)
    with open(os.path.join(out_dir, "metrics.json"), "w") as f:
        json.dump([{"point": p, "metrics": m.to_dict()} for p, m in rows], f, indent=2)
    if realizations_log:
        with open(os.path.join(out_dir, "realizations.jsonl"), "w") as f:
            for i, res in enumerate(results):
                for rec in res.records:
                    f.write(json.dumps({"point": i, **rec}) + "\n")


def load_metrics(path) -> list[Metrics]:
    with open(path) as f:
        return [Metrics.from_dict(x["metrics"]) for x in json.load(f)]
