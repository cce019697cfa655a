import numpy as np
import pytest

from coophybrid.channel_model import ChannelSet, ClusterParams, PathLossParams, draw_channel_set
from coophybrid.power import dbm_to_watt

NOISE = dbm_to_watt(-84.0)


def random_channel(rng, n, scale=1e-5):
    return (rng.standard_normal(n) + 1j * rng.standard_normal(n)) * scale


def channel_set(chans):
    K, M = len(chans), len(chans[0])
    return ChannelSet(chans, np.zeros((K, M), bool), np.ones((K, M)))


def small_network(seed, r=0, n_bs=2, n_users=4, n_antennas=16, n_subcarriers=None):
    bs = np.array([[-50.0, 0.0], [50.0, 0.0], [0.0, 50.0]])[:n_bs]
    users = np.random.default_rng([seed, r]).uniform(-100, 100, (n_users, 2))
    return draw_channel_set(
        bs, users, n_antennas, ClusterParams(), PathLossParams(), seed, realization=r, n_subcarriers=n_subcarriers
    )


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


# criterion number -> (passed, detail); filled by test_acceptance.py
ACCEPTANCE = {}


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(ACCEPTANCE):
        ok, detail = ACCEPTANCE[n]
        terminalreporter.write_line(f"criterion {n:2d}: {'PASS' if ok else 'FAIL'}  {detail}")
