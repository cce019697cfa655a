"""Oracle and property checks behind ``coophybrid validate``.

Each check returns a :class:`Check`; ``mutate`` installs a deliberate bug so
the suite can demonstrate that it notices.
"""

from __future__ import annotations

import contextlib
import itertools
import math
import time
from dataclasses import dataclass
from unittest import mock

import numpy as np

from . import channel_model, sdp, silence
from .analog import analog_precoders, egt_fhp, egt_gain
from .channel_model import ChannelSet, ClusterParams, PathLossParams, draw_channel_set
from .power import BaseStation, dbm_to_watt, hw_power

NOISE = dbm_to_watt(-84.0)


@dataclass
class Check:
    name: str
    passed: bool
    detail: str = ""


def random_channel(rng, n):
    return (rng.standard_normal(n) + 1j * rng.standard_normal(n)) * 1e-5


def check_path_loss() -> Check:
    # free-space loss at 1 m for 28 GHz, written out independently
    lam = 299792458.0 / 28e9
    pl = PathLossParams(shadow_sigma_los_db=0.0, shadow_sigma_nlos_db=0.0)
    worst = 0.0
    for d in (1.0, 10.0, 57.3, 141.4):
        for los, n in ((True, 2.1), (False, 3.4)):
            ref = 20 * math.log10(4 * math.pi / lam) + 10 * n * math.log10(d)
            worst = max(worst, abs(channel_model.path_loss_db(d, los, pl) - ref))
    return Check("path-loss closed form", worst < 1e-9, f"max error {worst:.2e} dB")


def check_hardware_power() -> Check:
    got = [hw_power(a, 64, 4) for a in ("FDP", "FHP", "PHP")]
    got[0] = hw_power("FDP", 64, 64)
    ref = [64 * 0.24 / 0.85, (256 * 0.04 + 4 * 0.24) / 0.85, (64 * 0.04 + 4 * 0.24) / 0.85]
    err = max(abs(g - r) for g, r in zip(got, ref))
    return Check("hardware power (N=64, L=4)", err < 1e-12, "FDP %.3f W, FHP %.3f W, PHP %.3f W" % tuple(got))


def check_egt_grid(n_channels: int = 50, seed: int = 11) -> Check:
    """Exhaustive 16-level phase search for N=4, L=1 against the closed form."""
    rng = np.random.default_rng(seed)
    levels = np.exp(2j * np.pi * np.arange(16) / 16)
    grid = np.array(list(itertools.product(levels, repeat=3)))  # first phase fixed
    grid = np.hstack([np.ones((grid.shape[0], 1)), grid]) / 2.0
    worst_closed, worst_grid = 0.0, math.inf
    for _ in range(n_channels):
        h = rng.standard_normal(4) + 1j * rng.standard_normal(4)
        r = egt_fhp([h], 1).matrix[:, 0]
        achieved = abs(np.vdot(h, r))
        closed = np.abs(h).sum() / 2.0
        best_grid = np.abs(grid @ h.conj()).max()
        worst_closed = max(worst_closed, abs(achieved - closed), abs(egt_gain(h, 1) - closed))
        # the closed form is the continuous optimum, so no grid point may beat it
        worst_grid = min(worst_grid, achieved - best_grid)
    ok = worst_closed < 1e-12 and worst_grid >= -1e-12
    return Check("EGT vs phase grid", bool(ok), f"closed-form error {worst_closed:.1e}, margin over grid {worst_grid:.2e}")


def single_user_power(h, tau, noise=NOISE):
    st = [BaseStation.make("FDP", h.size, h.size)]
    cs = ChannelSet([[h]], np.zeros((1, 1), bool), np.ones((1, 1)))
    an = analog_precoders(cs, "FDP", h.size)
    prob = sdp.assemble(an, cs, tau, noise, [1], st)
    return prob, sdp.solve(prob)


def check_single_user(n_channels: int = 100, seed: int = 5) -> Check:
    rng = np.random.default_rng(seed)
    worst = 0.0
    t0 = time.perf_counter()
    for i in range(n_channels):
        h = random_channel(rng, int(rng.choice([4, 16, 64])))
        tau = float(rng.uniform(0.5, 6))
        prob, sol = single_user_power(h, tau)
        ref = (2**tau - 1) * NOISE / np.vdot(h, h).real
        if not sol.optimal:
            return Check("single-user closed form", False, f"instance {i}: {sol.status}")
        worst = max(worst, abs(sol.per_bs_tx.sum() - ref) / ref)
    dt = time.perf_counter() - t0
    return Check("single-user closed form", bool(worst < 1e-6 and dt < 10), f"max relative error {worst:.2e}, {dt:.1f} s")


def check_single_user_dual(n_channels: int = 20, seed: int = 6) -> Check:
    """Scalar stationarity: eta' - lambda ||h||^2 = 0."""
    rng = np.random.default_rng(seed)
    worst = 0.0
    for _ in range(n_channels):
        h = random_channel(rng, 8)
        prob, sol = single_user_power(h, 3.0)
        ref = BaseStation.make("FDP", 8, 8).profile.eta_prime / np.vdot(h, h).real
        worst = max(worst, abs(sol.lam[0] - ref) / ref)
    return Check("single-user multiplier", bool(worst < 1e-5), f"max relative error {worst:.2e}")


def check_trace_identity(n_instances: int = 100, seed: int = 7) -> Check:
    rng = np.random.default_rng(seed)
    worst = 0.0
    for _ in range(n_instances):
        K, M, N, L = int(rng.integers(1, 5)), int(rng.integers(1, 4)), 16, 4
        L = max(L, K)
        chans = [[random_channel(rng, N) for _ in range(M)] for _ in range(K)]
        cs = ChannelSet(chans, np.zeros((K, M), bool), np.ones((K, M)))
        an = analog_precoders(cs, "FHP", L)
        st = [BaseStation.make("FHP", N, L)] * M
        prob = sdp.assemble(an, cs, 1.0, NOISE, [1] * M, st)
        ds = [(rng.standard_normal(prob.dim) + 1j * rng.standard_normal(prob.dim)) * 0.1 for _ in range(K)]
        w = [prob.antenna_weights(d) for d in ds]
        direct = sdp.evaluate_rates(w, cs, NOISE)
        trace = sdp.trace_rates(prob, [np.outer(d, d.conj()) for d in ds])
        worst = max(worst, float(np.max(np.abs(direct - trace))))
    return Check("trace identity", worst < 1e-10, f"max difference {worst:.1e} bit/s/Hz")


def _small_network(seed, r, n_bs=2, k=4, n=16):
    bs = np.array([[-50.0, 0.0], [50.0, 0.0]])[:n_bs]
    rng = np.random.default_rng([seed, r])
    users = rng.uniform(-100, 100, (k, 2))
    return draw_channel_set(bs, users, n, ClusterParams(), PathLossParams(), seed, realization=r)


def check_nesting(n_realizations: int = 10, seed: int = 8) -> Check:
    pairs, worst = 0, -math.inf
    for r in range(n_realizations):
        cs = _small_network(seed, r)
        out = {}
        for arch, L in (("FDP", 16), ("FHP", 4)):
            st = [BaseStation.make(arch, 16, L)] * 2
            out[arch] = silence.all_active(cs, analog_precoders(cs, arch, L), 2.0, NOISE, st)
        if out["FDP"].feasible and out["FHP"].feasible:
            pairs += 1
            worst = max(worst, (out["FDP"].p_tx_star - out["FHP"].p_tx_star) / out["FHP"].p_tx_star)
    ok = pairs > 0 and worst <= 1e-5
    return Check("FDP/FHP nesting", ok, f"{pairs} pairs, worst relative excess {worst:.1e}")


def check_kkt(n_instances: int = 5, seed: int = 9) -> Check:
    done, failed = 0, 0
    for r in range(50):
        if done >= n_instances:
            break
        cs = _small_network(seed, r)
        st = [BaseStation.make("FHP", 16, 4)] * 2
        res = silence.all_active(cs, analog_precoders(cs, "FHP", 4), 2.0, NOISE, st)
        if not res.feasible:
            continue
        done += 1
        rep = silence.kkt_check(res.problem, res.solution, res.weights)
        failed += not rep.passed
    return Check("KKT association", done > 0 and failed == 0, f"{done - failed}/{done} instances consistent")


CHECKS = (
    check_path_loss,
    check_hardware_power,
    check_egt_grid,
    check_single_user,
    check_single_user_dual,
    check_trace_identity,
    check_nesting,
    check_kkt,
)


def _wrong_exponent(distance, is_los, params, rng=None):
    # exponent applied as 20 n instead of 10 n
    base = _ORIG_PL(distance, is_los, params, rng)
    n = params.exponent_los if is_los else params.exponent_nlos
    return base + 10.0 * n * math.log10(distance)


def _flipped_rate_sign(self):
    return -(2.0 ** self.targets - 1.0)


_ORIG_PL = channel_model.path_loss_db
MUTATIONS = {
    "pathloss-exponent": lambda: mock.patch.object(channel_model, "path_loss_db", _wrong_exponent),
    "rate-sign": lambda: mock.patch.object(sdp.SdpProblem, "sinr_targets", property(_flipped_rate_sign)),
}


def run_all(mutate: str | None = None) -> list[Check]:
    ctx = MUTATIONS[mutate]() if mutate else contextlib.nullcontext()
    with ctx:
        return [chk() for chk in CHECKS]
