"""Frequency-selective extension: one analog stage, independent per-subcarrier digital solves."""

from __future__ import annotations

import dataclasses
import logging
import math
from dataclasses import dataclass

import numpy as np

from . import silence
from .analog import analog_precoders
from .channel_model import OfdmChannelSet
from .power import BaseStation

log = logging.getLogger(__name__)

MODES = ("algorithm1", "algorithm2", "all-active")
SUBCARRIER_BANDWIDTH_HZ = 3e6  # metadata only


def run_mode(mode: str, channels, analog, targets, noise, stations) -> silence.AlgoResult:
    if mode == "algorithm1":
        return silence.algorithm1(channels, analog, targets, noise, stations)
    if mode == "algorithm2":
        return silence.algorithm2(channels, analog, targets, noise, stations)
    if mode == "all-active":
        return silence.all_active(channels, analog, targets, noise, stations)
    raise ValueError(f"unknown mode {mode!r}; expected one of {', '.join(MODES)}")


def subcarrier_stations(stations, n_subcarriers: int) -> list[BaseStation]:
    """Same BSs with the transmit cap split evenly over subcarriers."""
    out = []
    for st in stations:
        prof = dataclasses.replace(st.profile, p_max=st.profile.p_max / n_subcarriers)
        out.append(dataclasses.replace(st, profile=prof))
    return out


@dataclass
class OfdmResult:
    results: list  # AlgoResult per subcarrier
    analog: list
    sum_rate: float
    sum_power: float
    energy_efficiency: float
    per_bs_tx: np.ndarray  # summed over subcarriers
    per_bs_power: np.ndarray
    active: np.ndarray

    @property
    def feasible(self) -> np.ndarray:
        return np.array([r.feasible for r in self.results])

    def table(self) -> list[dict]:
        rows = []
        for ns, r in enumerate(self.results):
            rows.append(
                {
                    "subcarrier": ns,
                    "feasible": r.feasible,
                    "status": r.status,
                    "p_tx": r.p_tx_star if r.feasible else math.nan,
                    "rates": r.rates.tolist() if r.rates is not None else None,
                }
            )
        return rows


def solve_ofdm(
    channels: OfdmChannelSet,
    architecture,
    n_rf,
    targets,
    noise,
    stations: list[BaseStation],
    mode: str = "all-active",
    per_subcarrier_hw: bool = False,
) -> OfdmResult:
    """Shared analog precoder from the summed channel, then one digital problem per subcarrier.

    ``targets`` is a scalar, a per-user vector, or a ``(K, N_s)`` array.
    """
    Ns, K = channels.n_subcarriers, channels.n_users
    tau = np.asarray(targets, float)
    if tau.ndim == 2:
        if tau.shape != (K, Ns):
            raise ValueError(f"per-subcarrier targets must have shape ({K}, {Ns})")
    else:
        tau = np.broadcast_to(tau, (K,))[:, None].repeat(Ns, axis=1)
    analog = analog_precoders(channels, architecture, n_rf)
    sub_st = subcarrier_stations(stations, Ns)
    results = []
    for ns in range(Ns):
        res = run_mode(mode, channels.subcarrier(ns), analog, tau[:, ns], noise, sub_st)
        if not res.feasible:
            log.info("subcarrier %d: %s", ns, res.status)
        results.append(res)
    return aggregate(results, analog, stations, per_subcarrier_hw)


def aggregate(results, analog, stations, per_subcarrier_hw: bool = False) -> OfdmResult:
    M = len(stations)
    tx = np.zeros(M)
    sum_rate = 0.0
    sub_power = 0.0
    for r in results:
        if r.feasible:
            tx += r.per_bs_tx
            sum_rate += float(np.sum(r.rates))
            sub_power += r.p_star
    active = tx > 0
    # same reduction as the single-carrier path so N_s = 1 reproduces it exactly
    per_bs, total = silence.total_power(stations, tx, active)
    if per_subcarrier_hw:
        total = sub_power
    return OfdmResult(results, analog, sum_rate, total, energy_efficiency(sum_rate, total), tx, per_bs, active)


def energy_efficiency(sum_rate: float, total_power: float) -> float:
    if not total_power > 0 or not math.isfinite(total_power):
        raise ValueError("energy efficiency needs a positive, finite power")
    return sum_rate / total_power
