"""Acceptance gate: one test per criterion, each printing a PASS/FAIL line.

Expensive Monte-Carlo runs are session fixtures shared between criteria.
All runs use the same master seed.
"""

import itertools
import math
import time

import numpy as np
import pytest

from coophybrid import montecarlo as mc
from coophybrid import ofdm, sdp, silence
from coophybrid.analog import analog_precoders, egt_fhp
from coophybrid.channel_model import ChannelSet
from coophybrid.power import TABLE1, BaseStation, hw_power

from conftest import ACCEPTANCE, NOISE, channel_set, random_channel

SEED = 1
TAU = 4.0


def report(n, ok, detail):
    ACCEPTANCE[n] = (bool(ok), detail)
    print(f"criterion {n}: {'PASS' if ok else 'FAIL'}  {detail}")
    assert ok, detail


def scenario(**kw):
    base = dict(n_bs=2, n_users=4, n_antennas=64, n_rf=4, architecture="FHP", target=TAU, seed=SEED)
    base.update(kw)
    return mc.Scenario(**base)


@pytest.fixture(scope="session")
def runs():
    cache = {}

    def get(**kw):
        key = tuple(sorted(kw.items()))
        if key not in cache:
            cache[key] = mc.run(scenario(**kw))
        return cache[key]

    return get


def feasible(rec):
    return rec["status"] == sdp.OPTIMAL


def test_criterion_01_single_user_closed_form():
    rng = np.random.default_rng(SEED)
    worst = 0.0
    t0 = time.perf_counter()
    for _ in range(100):
        h = random_channel(rng, int(rng.choice([4, 16, 64])))
        tau = float(rng.uniform(0.5, 6))
        cs = channel_set([[h]])
        st_ = [BaseStation.make("FDP", h.size, h.size)]
        sol = sdp.solve(sdp.assemble(analog_precoders(cs, "FDP", h.size), cs, tau, NOISE, [1], st_))
        ref = (2**tau - 1) * NOISE / np.vdot(h, h).real
        worst = max(worst, abs(sol.per_bs_tx.sum() - ref) / ref if sol.optimal else math.inf)
    dt = time.perf_counter() - t0
    report(1, worst <= 1e-6 and dt < 10, f"max relative error {worst:.2e} over 100 channels in {dt:.2f} s")


def test_criterion_02_egt_optimality():
    rng = np.random.default_rng(SEED)
    levels = np.exp(2j * np.pi * np.arange(16) / 16)
    grid = np.array(list(itertools.product(levels, repeat=4))) / 2.0
    closed_err, margin = 0.0, math.inf
    for _ in range(50):
        h = rng.standard_normal(4) + 1j * rng.standard_normal(4)
        r = egt_fhp([h], 1).matrix[:, 0]
        achieved = abs(np.vdot(h, r))
        closed_err = max(closed_err, abs(achieved - np.abs(h).sum() / math.sqrt(4)))
        margin = min(margin, achieved - np.abs(grid @ h.conj()).max())
    ok = closed_err <= 1e-12 and margin >= -1e-12
    report(2, ok, f"closed-form error {closed_err:.1e}, min gain over 16-level grid {margin:.2e}")


def test_criterion_03_trace_identity():
    rng = np.random.default_rng(SEED)
    worst = 0.0
    for _ in range(100):
        K, M = int(rng.integers(1, 5)), int(rng.integers(1, 4))
        arch = str(rng.choice(["FHP", "PHP"]))
        cs = channel_set([[random_channel(rng, 16) for _ in range(M)] for _ in range(K)])
        st_ = [BaseStation.make(arch, 16, 4)] * M
        prob = sdp.assemble(analog_precoders(cs, arch, 4), cs, 1.0, NOISE, [1] * M, st_)
        ds = [(rng.standard_normal(prob.dim) + 1j * rng.standard_normal(prob.dim)) * 0.1 for _ in range(K)]
        direct = sdp.evaluate_rates([prob.antenna_weights(d) for d in ds], cs, NOISE)
        trace = sdp.trace_rates(prob, [np.outer(d, d.conj()) for d in ds])
        worst = max(worst, float(np.max(np.abs(direct - trace))))
    report(3, worst <= 1e-10, f"max rate difference {worst:.1e} bit/s/Hz over 100 instances")


def test_criterion_04_constraint_satisfaction(runs):
    res = runs(mode="algorithm1", realizations=500)
    recs = [r for r in res.records[:200] if feasible(r)]
    rate_gap = min(min(r["rates"]) - TAU for r in recs)
    pow_gap = max(max(r["per_bs_tx"]) - TABLE1.p_max for r in recs)
    ok = rate_gap >= -1e-4 and pow_gap <= 1e-6 and len(recs) > 0
    report(4, ok, f"{len(recs)}/200 feasible; min rate margin {rate_gap:.2e}, max power over cap {pow_gap:.2e} W")


def test_criterion_05_nesting(runs):
    fdp = runs(mode="all-active", architecture="FDP", n_rf=64, realizations=500)
    fhp = runs(mode="all-active", realizations=500)
    pairs, worst = 0, -math.inf
    for a, b in zip(fdp.records, fhp.records):
        if feasible(a) and feasible(b):
            pairs += 1
            worst = max(worst, (a["p_tx"] - b["p_tx"]) / b["p_tx"])
    ok = pairs >= 100 and worst <= 1e-5
    report(5, ok, f"{pairs} jointly feasible pairs, worst relative FDP excess {worst:.2e}")


def test_criterion_06_silence_optimality(runs):
    a1 = runs(mode="algorithm1", realizations=500)
    aa = runs(mode="all-active", realizations=500)
    a2 = runs(mode="algorithm2", realizations=200)
    worst_aa = -math.inf
    for x, y in zip(a1.records, aa.records):
        if feasible(y):
            worst_aa = max(worst_aa, (x["objective"] - y["objective"]) / y["objective"] if feasible(x) else math.inf)
    pairs, worst_a2 = 0, math.inf
    for x, y in zip(a1.records, a2.records):
        if feasible(x) and feasible(y):
            pairs += 1
            worst_a2 = min(worst_a2, (y["p_total"] - x["p_total"]) / x["p_total"])
    iters = a2.metrics.mean_iterations
    ok = worst_aa <= 1e-9 and pairs >= 100 and worst_a2 >= -1e-5 and iters <= 2
    report(
        6,
        ok,
        f"alg1 vs all-active worst {worst_aa:.1e}; alg2 vs alg1 worst {worst_a2:.1e} over {pairs} pairs; "
        f"mean alg2 iterations {iters:.2f} (limit 2)",
    )


def test_criterion_07_cooperation_trend(runs):
    out = {}
    t0 = time.perf_counter()
    for arch in ("FHP", "PHP"):
        p1 = runs(mode="algorithm1", architecture=arch, n_bs=1, realizations=500).metrics.mean_tx_power
        p2 = runs(mode="algorithm1", architecture=arch, n_bs=2, realizations=500).metrics.mean_tx_power
        out[arch] = 1 - p2 / p1
    dt = time.perf_counter() - t0
    ok = 0.56 <= out["FHP"] <= 0.86 and 0.41 <= out["PHP"] <= 0.71 and dt < 1800
    report(7, ok, f"RF power reduction M=1->2: FHP {out['FHP']:.1%} (56-86%), PHP {out['PHP']:.1%} (41-71%)")


def test_criterion_08_architecture_ordering(runs):
    n = 300
    res = {
        "FDP": runs(mode="algorithm1", architecture="FDP", n_rf=64, realizations=n),
        "FHP": runs(mode="algorithm1", realizations=500),
        "PHP": runs(mode="algorithm1", architecture="PHP", realizations=500),
    }
    idx = [i for i in range(n) if all(feasible(r.records[i]) for r in res.values())]
    mean = {a: float(np.mean([r.records[i]["p_tx"] for i in idx])) for a, r in res.items()}
    hw = [hw_power("FDP", 64, 64), hw_power("FHP", 64, 4), hw_power("PHP", 64, 4)]
    ok = (
        len(idx) >= 300 * 0.9
        and mean["PHP"] >= mean["FHP"] >= mean["FDP"]
        and hw[0] > hw[1] > hw[2]
        and [round(x, 2) for x in hw] == [18.07, 13.18, 4.14]
    )
    report(
        8,
        ok,
        f"{len(idx)} paired realizations; mean RF power PHP {mean['PHP']:.2f} W, FHP {mean['FHP']:.2f} W, "
        f"FDP {mean['FDP']:.2f} W; hardware {hw[0]:.2f} > {hw[1]:.2f} > {hw[2]:.2f} W",
    )


def test_criterion_09_infeasibility_trend(runs):
    p = [runs(mode="all-active", n_bs=m, blockage=0.05, realizations=1000).metrics.infeasibility_prob for m in (1, 2, 3)]
    low = runs(mode="all-active", n_bs=1, blockage=0.01, realizations=1000).metrics.infeasibility_prob
    ok = p[0] > p[1] > p[2] and low < p[0]
    report(9, ok, f"beta=0.05: M=1 {p[0]:.3f}, M=2 {p[1]:.3f}, M=3 {p[2]:.3f}; M=1 beta=0.01 {low:.3f}")


def test_criterion_10_kkt_spot_check():
    sc = scenario(mode="all-active")
    done, failed, worst = 0, 0, 0.0
    r = 0
    while done < 20 and r < 200:
        cs = mc.realization_channels(sc, r)
        r += 1
        res = silence.all_active(cs, analog_precoders(cs, "FHP", 4), TAU, sc.noise, sc.stations())
        if not res.feasible:
            continue
        rep = silence.kkt_check(res.problem, res.solution, res.weights)
        done += 1
        failed += not rep.passed
        worst = max(worst, float(rep.equality_error.max()), float(rep.max_score_gap.max()))
    report(10, done == 20 and failed == 0, f"{done - failed}/{done} instances consistent, worst relative error {worst:.1e}")


def test_criterion_11_ofdm_degeneracy():
    mismatches = 0
    for seed in range(20):
        sc = scenario(mode="algorithm1", realizations=1, seed=seed)
        a = mc.run_realization(sc, 0)
        b = mc.run_realization(sc.replace(n_subcarriers=1), 0)
        keys = ("status", "per_bs_tx", "p_tx", "p_total", "pattern")
        mismatches += any(a.get(k) != b.get(k) for k in keys)
    sc = scenario(mode="all-active", target=2.0, n_subcarriers=8)
    chans = mc.realization_channels(sc, 0)
    res = ofdm.solve_ofdm(chans, "FHP", 4, 2.0, sc.noise, sc.stations())
    worst = 0.0
    rng = np.random.default_rng(SEED)
    for _ in range(10):
        perm = rng.permutation(len(res.results))
        other = ofdm.aggregate([res.results[i] for i in perm], res.analog, sc.stations())
        worst = max(worst, abs(other.sum_power - res.sum_power) / res.sum_power, abs(other.sum_rate - res.sum_rate) / max(res.sum_rate, 1e-300))
    ok = mismatches == 0 and worst <= 1e-12
    report(11, ok, f"{20 - mismatches}/20 seeds identical with N_s=1; permutation difference {worst:.1e}")


def test_criterion_12_determinism(tmp_path):
    sc = scenario(mode="algorithm1", realizations=40)
    for w in (1, 2):
        mc.export([mc.run(sc, workers=w)], tmp_path / f"w{w}")
    same = (tmp_path / "w1" / "metrics.csv").read_bytes() == (tmp_path / "w2" / "metrics.csv").read_bytes()
    report(12, same, "metrics.csv identical for 1 and 2 workers" if same else "metrics.csv differs between worker counts")
