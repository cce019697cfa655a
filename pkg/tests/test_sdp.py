import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from coophybrid import sdp
from coophybrid.analog import analog_precoders
from coophybrid.power import BaseStation, HardwareProfile

from conftest import NOISE, channel_set, random_channel, small_network


def single_user(h, tau, profile=None):
    prof = profile or HardwareProfile()
    stations = [BaseStation.make("FDP", h.size, h.size, prof)]
    cs = channel_set([[h]])
    prob = sdp.assemble(analog_precoders(cs, "FDP", h.size), cs, tau, NOISE, [1], stations)
    return cs, prob, sdp.solve(prob)


def network_problem(seed, arch="FHP", n=16, L=4, tau=2.0, pattern=(1, 1), **kw):
    cs = small_network(seed, n_antennas=n)
    st_ = [BaseStation.make(arch, n, L)] * 2
    an = analog_precoders(cs, arch, st_[0].n_rf)
    return cs, sdp.assemble(an, cs, tau, NOISE, list(pattern), st_, **kw)


def test_single_user_power_and_mrt_direction(rng):
    for _ in range(20):
        h = random_channel(rng, int(rng.choice([4, 16])))
        tau = float(rng.uniform(0.5, 6))
        cs, prob, sol = single_user(h, tau)
        assert sol.optimal
        ref = (2**tau - 1) * NOISE / np.vdot(h, h).real
        assert math.isclose(sol.per_bs_tx.sum(), ref, rel_tol=1e-6)
        w = sdp.precoders_from_solution(prob, sol, cs).weights[0][0]
        cos = abs(np.vdot(w, h)) / (np.linalg.norm(w) * np.linalg.norm(h))
        assert cos > 1 - 1e-9


def test_single_user_multiplier(rng):
    h = random_channel(rng, 8)
    _, _, sol = single_user(h, 3.0)
    ref = HardwareProfile().eta_prime / np.vdot(h, h).real
    assert math.isclose(sol.lam[0], ref, rel_tol=1e-5)


def test_single_user_out_of_reach_is_infeasible(rng):
    h = random_channel(rng, 4, scale=1e-9)
    _, _, sol = single_user(h, 6.0)
    assert sol.status == sdp.INFEASIBLE


def test_user_without_channel_is_infeasible(rng):
    h = random_channel(rng, 8)
    cs = channel_set([[h], [np.zeros(8, complex)]])
    st_ = [BaseStation.make("FDP", 8, 8)]
    prob = sdp.assemble(analog_precoders(cs, "FDP", 8), cs, 1.0, NOISE, [1], st_)
    assert sdp.solve(prob).status == sdp.INFEASIBLE


def test_zero_target_user_needs_no_power(rng):
    cs = channel_set([[random_channel(rng, 8)], [random_channel(rng, 8)]])
    st_ = [BaseStation.make("FDP", 8, 8)]
    prob = sdp.assemble(analog_precoders(cs, "FDP", 8), cs, [2.0, 0.0], NOISE, [1], st_)
    sol = sdp.solve(prob)
    assert sol.optimal
    assert np.trace(sol.d_matrices[1]).real < 1e-6 * np.trace(sol.d_matrices[0]).real


@settings(max_examples=40, deadline=None)
@given(seed=st.integers(0, 2**31), K=st.integers(1, 4), M=st.integers(1, 3))
def test_trace_form_rate_matches_direct_rate(seed, K, M):
    rng = np.random.default_rng(seed)
    chans = [[random_channel(rng, 16) for _ in range(M)] for _ in range(K)]
    cs = channel_set(chans)
    st_ = [BaseStation.make("FHP", 16, 4)] * M
    prob = sdp.assemble(analog_precoders(cs, "FHP", 4), cs, 1.0, NOISE, [1] * M, st_)
    ds = [(rng.standard_normal(prob.dim) + 1j * rng.standard_normal(prob.dim)) * 0.1 for _ in range(K)]
    direct = sdp.evaluate_rates([prob.antenna_weights(d) for d in ds], cs, NOISE)
    trace = sdp.trace_rates(prob, [np.outer(d, d.conj()) for d in ds])
    assert np.max(np.abs(direct - trace)) < 1e-10


@pytest.mark.parametrize("seed", [0, 1, 2])
def test_solution_meets_constraints(seed):
    cs, prob = network_problem(seed)
    sol = sdp.solve(prob)
    assert sol.optimal
    rep = sdp.verify_solution(sol, prob)
    assert rep.passed
    prec = sdp.precoders_from_solution(prob, sol, cs)
    rates = sdp.evaluate_rates(prec.weights, cs, NOISE)
    assert np.all(rates >= 2.0 - 1e-4)
    assert np.all(prec.per_bs_tx() <= prob.p_max + 1e-6)
    # objective is the weighted RF power plus the hardware constant
    assert math.isclose(sol.objective, float(prob.weights @ sol.per_bs_tx) + prob.constant, rel_tol=1e-9)


def test_binding_power_cap_is_respected():
    cs, prob = network_problem(3, tau=2.0)
    free = sdp.solve(prob)
    assert free.optimal
    # shrink the cap of the busier BS below its unconstrained load
    m = int(np.argmax(free.per_bs_tx))
    cap = 0.7 * free.per_bs_tx[m]
    prof = HardwareProfile(p_max=cap)
    st_ = [BaseStation.make("FHP", 16, 4, prof)] * 2
    prob2 = sdp.assemble(analog_precoders(cs, "FHP", 4), cs, 2.0, NOISE, [1, 1], st_)
    sol = sdp.solve(prob2)
    if sol.optimal:
        assert sol.per_bs_tx[m] <= cap * (1 + 1e-7)
        assert sol.mu[m] > 0
        assert sol.objective >= free.objective - 1e-9 * abs(free.objective)
        prec = sdp.precoders_from_solution(prob2, sol, cs)
        assert np.all(prec.per_bs_tx() <= cap + 1e-6)
    else:
        assert sol.status == sdp.INFEASIBLE


def test_silent_bs_carries_no_power():
    cs, prob = network_problem(4, pattern=(1, 0))
    sol = sdp.solve(prob)
    if sol.optimal:
        assert sol.per_bs_tx[1] == 0.0
        assert np.isnan(sol.mu[1])


def test_fdp_compression_is_exact():
    for seed in (5, 6):
        cs, full = network_problem(seed, arch="FDP", n=16, L=16, compress_fdp=False)
        _, small = network_problem(seed, arch="FDP", n=16, L=16)
        assert small.dim < full.dim
        a, b = sdp.solve(full), sdp.solve(small)
        assert a.status == b.status
        if a.optimal:
            assert math.isclose(a.objective, b.objective, rel_tol=1e-6)


def test_fdp_never_needs_more_power_than_fhp():
    for seed in range(4):
        _, p_fdp = network_problem(seed, arch="FDP", n=16, L=16)
        _, p_fhp = network_problem(seed, arch="FHP", n=16, L=4)
        a, b = sdp.solve(p_fdp), sdp.solve(p_fhp)
        if a.optimal and b.optimal:
            assert a.per_bs_tx.sum() <= b.per_bs_tx.sum() * (1 + 1e-5)
        if b.optimal:
            assert a.optimal


def test_envelope_slope():
    st_ = [BaseStation.make("FHP", 64, 4)]
    prof = st_[0].profile
    hw = st_[0].hw_power
    assert math.isclose(sdp.envelope_slope(st_)[0], 0.5 * hw / prof.p_max + prof.eta_prime)
    assert math.isclose(sdp.envelope_slope(st_, [2.0], 1e-6)[0], 0.5 * hw / (2.0 + 1e-6) + prof.eta_prime)


def test_envelope_requires_all_active():
    with pytest.raises(ValueError):
        network_problem(0, pattern=(1, 0), envelope=True)


def test_assemble_rejects_bad_patterns():
    with pytest.raises(ValueError):
        network_problem(0, pattern=(0, 0))
    with pytest.raises(ValueError):
        network_problem(0, pattern=(1, 1, 1))


def test_extract_rank1_exact_and_psd_guard(rng):
    d = rng.standard_normal(6) + 1j * rng.standard_normal(6)
    out, ratio = sdp.extract_rank1(np.outer(d, d.conj()))
    assert ratio < 1e-12
    assert np.allclose(np.outer(out, out.conj()), np.outer(d, d.conj()))
    with pytest.raises(ValueError):
        sdp.extract_rank1(-np.eye(3))
    z, r = sdp.extract_rank1(np.zeros((3, 3)))
    assert not np.any(z) and r == 0.0


def test_blockwise_extraction_keeps_joint_power(rng):
    _, prob = network_problem(0)
    n0 = prob.block_sizes[0]
    a = rng.standard_normal(n0) + 1j * rng.standard_normal(n0)
    b = rng.standard_normal(prob.dim - n0) + 1j * rng.standard_normal(prob.dim - n0)
    # independent per-BS blocks: the whole matrix is rank 2, each block rank 1
    D = np.zeros((prob.dim, prob.dim), complex)
    D[:n0, :n0] = np.outer(a, a.conj())
    D[n0:, n0:] = np.outer(b, b.conj())
    d, ratio = sdp.extract_blocks(prob, D)
    assert ratio < 1e-12
    assert math.isclose(np.vdot(d, d).real, np.trace(D).real)


def test_verify_flags_violations():
    cs, prob = network_problem(1)
    sol = sdp.solve(prob)
    assert sdp.verify_solution(sol, prob).passed
    sol.d_matrices = [0.5 * D for D in sol.d_matrices]
    rep = sdp.verify_solution(sol, prob)
    assert not rep.passed and rep.rate_residuals.min() < -0.4


def test_problem_text_dump():
    _, prob = network_problem(2)
    text = prob.to_text()
    assert text.startswith(f"# sdp dim {prob.dim} users 4 bs 2")
    assert text.count("matrix H") == 4 and text.count("matrix Q") == 2
    assert "np.float64" not in text


def test_solver_status_contract():
    _, prob = network_problem(0, tau=30.0)
    sol = sdp.solve(prob)
    assert sol.status == sdp.INFEASIBLE
    assert sol.d_matrices is None or sol.d_matrices == []


def test_invalid_certificate_is_rejected():
    # a ray that is not one: negative multiplier
    y = np.array([1.0, -1.0])
    assert not sdp._valid_ray(y, np.array([1.0, 0.0]), [])
    assert sdp._valid_ray(np.array([1.0, 0.0]), np.array([1.0, 0.0]), [])


def _fixed_point_min_power(H, c, noise, iters=5000):
    # uplink-downlink duality for one BS with a sum-power objective
    K, n = H.shape
    lam = np.zeros(K)
    for _ in range(iters):
        A = np.eye(n) + (H.T * lam) @ H.conj()
        g = np.real(np.einsum("ki,ij,kj->k", H.conj(), np.linalg.inv(A), H))
        new = 1 / ((1 + 1 / c) * g)
        if np.max(np.abs(new - lam) / new) < 1e-13:
            return float((new * noise).sum())
        lam = new
    return math.inf


@pytest.mark.parametrize("seed", range(5))
def test_multiuser_power_matches_duality_fixed_point(seed):
    rng = np.random.default_rng(seed)
    K, n, tau = 3, 8, 2.0
    H = np.array([random_channel(rng, n) for _ in range(K)])
    cs = channel_set([[h] for h in H])
    st_ = [BaseStation.make("FDP", n, n)]
    prob = sdp.assemble(analog_precoders(cs, "FDP", n), cs, tau, NOISE, [1], st_, compress_fdp=False)
    sol = sdp.solve(prob)
    ref = _fixed_point_min_power(H, np.full(K, 2**tau - 1), NOISE)
    assert sol.optimal
    assert math.isclose(sol.per_bs_tx.sum(), ref, rel_tol=1e-6)
