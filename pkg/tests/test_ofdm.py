import math

import numpy as np
import pytest

from coophybrid import montecarlo as mc
from coophybrid import ofdm
from coophybrid.power import BaseStation

from conftest import NOISE, small_network


def test_single_subcarrier_reproduces_single_carrier():
    for seed in range(3):
        sc = mc.Scenario(n_bs=2, n_antennas=16, realizations=1, seed=seed, mode="algorithm1")
        a = mc.run_realization(sc, 0)
        b = mc.run_realization(sc.replace(n_subcarriers=1), 0)
        assert a["status"] == b["status"]
        if a["status"] == "optimal":
            assert a["per_bs_tx"] == b["per_bs_tx"]
            assert a["p_tx"] == b["p_tx"]
            assert a["p_total"] == b["p_total"]
            assert a["pattern"] == b["pattern"]


def test_aggregate_is_permutation_invariant():
    of = small_network(3, n_subcarriers=4)
    st_ = [BaseStation.make("FHP", 16, 4)] * 2
    res = ofdm.solve_ofdm(of, "FHP", 4, 1.0, NOISE, st_)
    assert res.feasible.all()
    rng = np.random.default_rng(0)
    for _ in range(5):
        perm = rng.permutation(len(res.results))
        other = ofdm.aggregate([res.results[i] for i in perm], res.analog, st_)
        assert abs(other.sum_power - res.sum_power) <= 1e-12 * res.sum_power
        assert abs(other.sum_rate - res.sum_rate) <= 1e-12 * res.sum_rate
        assert np.allclose(other.per_bs_tx, res.per_bs_tx, rtol=1e-12, atol=0)


def test_sum_rate_and_energy_efficiency():
    of = small_network(5, n_subcarriers=3)
    st_ = [BaseStation.make("FHP", 16, 4)] * 2
    res = ofdm.solve_ofdm(of, "FHP", 4, 1.0, NOISE, st_)
    if res.feasible.all():
        assert math.isclose(res.sum_rate, sum(r.rates.sum() for r in res.results))
        assert math.isclose(res.energy_efficiency, res.sum_rate / res.sum_power)
        assert len(res.table()) == 3


def test_per_subcarrier_hardware_accounting_costs_more():
    of = small_network(5, n_subcarriers=3)
    st_ = [BaseStation.make("FHP", 16, 4)] * 2
    shared = ofdm.solve_ofdm(of, "FHP", 4, 1.0, NOISE, st_)
    per_sc = ofdm.solve_ofdm(of, "FHP", 4, 1.0, NOISE, st_, per_subcarrier_hw=True)
    if shared.feasible.all():
        assert per_sc.sum_power > shared.sum_power


def test_cap_split_over_subcarriers():
    st_ = [BaseStation.make("FHP", 16, 4)]
    sub = ofdm.subcarrier_stations(st_, 64)
    assert math.isclose(sub[0].profile.p_max, st_[0].profile.p_max / 64)
    assert sub[0].hw_power == st_[0].hw_power


def test_target_shapes():
    of = small_network(1, n_subcarriers=2)
    st_ = [BaseStation.make("FHP", 16, 4)] * 2
    with pytest.raises(ValueError):
        ofdm.solve_ofdm(of, "FHP", 4, np.ones((4, 3)), NOISE, st_)
    res = ofdm.solve_ofdm(of, "FHP", 4, np.array([[1.0, 0.5]] * 4), NOISE, st_)
    assert len(res.results) == 2


def test_energy_efficiency_needs_positive_power():
    with pytest.raises(ValueError):
        ofdm.energy_efficiency(1.0, 0.0)
    with pytest.raises(ValueError):
        ofdm.energy_efficiency(1.0, math.inf)


def test_unknown_mode():
    cs = small_network(0)
    with pytest.raises(ValueError):
        ofdm.run_mode("greedy", cs, None, 1.0, NOISE, [])
