"""BS silent-mode selection: exhaustive patterns and the convex-envelope iteration."""

from __future__ import annotations

import itertools
import logging
import math
from dataclasses import dataclass, field

import numpy as np

from . import sdp
from .analog import AnalogPrecoder
from .channel_model import ChannelSet
from .power import BaseStation

log = logging.getLogger(__name__)

TIE_TOL = 1e-8
EPS = 1e-6
EPS_STOP = 1e-4
MAX_ITER = 20
SILENT_THRESHOLD = 1e-6
ASSOCIATION_THRESHOLD = 1e-6


@dataclass
class AlgoResult:
    status: str
    pattern: np.ndarray | None = None
    weights: list[list[np.ndarray]] | None = None  # weights[k][m] = w_{k,m}
    per_bs_tx: np.ndarray | None = None
    per_bs_power: np.ndarray | None = None
    p_tx_star: float = math.nan  # total RF transmit power
    p_star: float = math.nan  # weighted total power from the power model
    objective: float = math.nan  # value of the program that produced the precoders
    rates: np.ndarray | None = None
    association: dict | None = None
    iterations: int = 0
    rank_ratio: float = 0.0
    rescale: float = 1.0
    pattern_objectives: dict = field(default_factory=dict)
    history: list = field(default_factory=list)  # per-iteration records (algorithm 2)
    p_star_sub: float = math.nan  # convex-envelope objective at convergence (algorithm 2)
    problem: sdp.SdpProblem | None = None
    solution: sdp.SdpSolution | None = None
    message: str = ""

    @property
    def feasible(self) -> bool:
        return self.status == sdp.OPTIMAL


def total_power(stations, per_bs_tx, pattern) -> tuple[np.ndarray, float]:
    per_bs = np.array([st.power(float(p), bool(z)) for st, p, z in zip(stations, per_bs_tx, pattern)])
    weights = np.array([st.profile.weight for st in stations])
    return per_bs, float(weights @ per_bs)


def _finalize(problem, solution, channels, stations, pattern, threshold=ASSOCIATION_THRESHOLD) -> AlgoResult:
    prec = sdp.precoders_from_solution(problem, solution, channels)
    weights = prec.weights
    pattern = np.asarray(pattern, bool)
    for row in weights:
        for m in np.flatnonzero(~pattern):
            row[m] = np.zeros_like(row[m])
    tx = np.array([sum(float(np.vdot(row[m], row[m]).real) for row in weights) for m in range(len(stations))])
    per_bs, p_star = total_power(stations, tx, pattern)
    return AlgoResult(
        status=sdp.OPTIMAL,
        pattern=pattern.astype(int),
        weights=weights,
        per_bs_tx=tx,
        per_bs_power=per_bs,
        p_tx_star=float(tx.sum()),
        p_star=p_star,
        objective=solution.objective,
        rates=sdp.evaluate_rates(weights, channels, problem.noise),
        association=extract_association(weights, threshold),
        rank_ratio=float(prec.rank_ratios.max()) if prec.rank_ratios.size else 0.0,
        rescale=prec.rescale,
        problem=problem,
        solution=solution,
    )


def solve_pattern(channels, analog, targets, noise, stations, pattern, **kw):
    problem = sdp.assemble(analog, channels, targets, noise, pattern, stations, **kw)
    return problem, sdp.solve(problem)


def all_active(
    channels: ChannelSet,
    analog: list[AnalogPrecoder],
    targets,
    noise,
    stations: list[BaseStation],
    **kw,
) -> AlgoResult:
    """Every BS on; a single solve of the relaxed program."""
    pattern = np.ones(channels.n_bs, dtype=int)
    problem, sol = solve_pattern(channels, analog, targets, noise, stations, pattern, **kw)
    if not sol.optimal:
        return AlgoResult(sol.status, pattern=pattern, iterations=1, message=sol.message)
    res = _finalize(problem, sol, channels, stations, pattern)
    res.iterations = 1
    res.pattern_objectives = {tuple(pattern): sol.objective}
    return res


def _tie_key(pattern):
    return (-int(np.sum(np.asarray(pattern) == 0)), tuple(int(x) for x in pattern))


def algorithm1(
    channels: ChannelSet,
    analog: list[AnalogPrecoder],
    targets,
    noise,
    stations: list[BaseStation],
    patterns=None,
    **kw,
) -> AlgoResult:
    """Exhaustive search over the 2^M - 1 non-empty silence patterns."""
    M = channels.n_bs
    if patterns is None:
        patterns = [p for p in itertools.product((0, 1), repeat=M) if any(p)]
    objectives = {}
    best = None
    n_fail = 0
    for pat in patterns:
        pat = tuple(int(x) for x in pat)
        problem, sol = solve_pattern(channels, analog, targets, noise, stations, pat, **kw)
        if sol.status == sdp.NUMERICAL_FAILURE:
            n_fail += 1
            objectives[pat] = math.nan
            continue
        objectives[pat] = sol.objective if sol.optimal else math.inf
        if not sol.optimal:
            continue
        if best is None:
            best = (pat, problem, sol)
            continue
        b_obj = best[2].objective
        tol = TIE_TOL * max(1.0, abs(b_obj))
        if sol.objective < b_obj - tol or (abs(sol.objective - b_obj) <= tol and _tie_key(pat) < _tie_key(best[0])):
            best = (pat, problem, sol)
    if best is None:
        status = sdp.NUMERICAL_FAILURE if n_fail else sdp.INFEASIBLE
        return AlgoResult(status, iterations=len(patterns), pattern_objectives=objectives)
    pat, problem, sol = best
    res = _finalize(problem, sol, channels, stations, pat)
    res.iterations = len(patterns)
    res.pattern_objectives = objectives
    if n_fail:
        res.message = f"{n_fail} pattern(s) failed numerically"
    return res


def mm_merit(stations, per_bs_tx, eps: float = EPS) -> float:
    """Majorize-minimize merit of the envelope iteration (nonincreasing in theory)."""
    out = 0.0
    for st, p in zip(stations, per_bs_tx):
        pr = st.profile
        out += pr.weight * ((1 - pr.silent_scalar) * st.hw_power * math.log(max(p, 0.0) + eps) + pr.eta_prime * p)
    return out


def algorithm2(
    channels: ChannelSet,
    analog: list[AnalogPrecoder],
    targets,
    noise,
    stations: list[BaseStation],
    eps: float = EPS,
    eps_stop: float = EPS_STOP,
    max_iter: int = MAX_ITER,
    silent_threshold: float = SILENT_THRESHOLD,
    **kw,
) -> AlgoResult:
    """Reweighted convex-envelope iteration; BSs left with negligible power go silent.

    ``iterations`` counts the reweighted solves after the initial one.
    """
    M = channels.n_bs
    pattern = np.ones(M, dtype=int)
    eta_hat = sdp.envelope_slope(stations)
    problem, sol = solve_pattern(channels, analog, targets, noise, stations, pattern, envelope=True, eta_hat=eta_hat, **kw)
    if not sol.optimal:
        return AlgoResult(sol.status, message=sol.message)
    history = [_record(0, eta_hat, sol, stations, eps)]
    prev = sol.per_bs_tx
    it = 0
    converged = False
    while it < max_iter:
        it += 1
        eta_hat = sdp.envelope_slope(stations, prev, eps)
        p_new, s_new = solve_pattern(channels, analog, targets, noise, stations, pattern, envelope=True, eta_hat=eta_hat, **kw)
        if not s_new.optimal:
            log.warning("reweighted solve %d ended with %s; keeping previous iterate", it, s_new.status)
            it -= 1
            break
        problem, sol = p_new, s_new
        history.append(_record(it, eta_hat, sol, stations, eps))
        change = float(np.abs(sol.per_bs_tx - prev).sum())
        prev = sol.per_bs_tx
        if change < eps_stop:
            converged = True
            break

    final = (sol.per_bs_tx > silent_threshold).astype(int)
    res = _finalize(problem, sol, channels, stations, final)
    targets_arr = problem.targets
    if np.any(res.rates < targets_arr - 1e-6) and final.any():
        # zeroing the residual power of silenced BSs cost rate; re-solve on the final pattern
        p_fix, s_fix = solve_pattern(channels, analog, targets, noise, stations, final, **kw)
        if s_fix.optimal:
            res = _finalize(p_fix, s_fix, channels, stations, final)
            res.message = "polished on final pattern"
        else:
            log.warning("polish solve on final pattern ended with %s", s_fix.status)
    res.iterations = it
    res.history = history
    res.objective = sol.objective
    res.p_star_sub = sol.objective
    if not converged:
        res.message = (res.message + "; " if res.message else "") + "iteration limit reached"
    return res


def _record(i, eta_hat, sol, stations, eps):
    return {
        "iteration": i,
        "eta_hat": np.asarray(eta_hat).tolist(),
        "per_bs_tx": sol.per_bs_tx.tolist(),
        "objective": sol.objective,
        "merit": mm_merit(stations, sol.per_bs_tx, eps),
    }


def extract_association(weights, threshold: float = ASSOCIATION_THRESHOLD) -> dict:
    """Serving sets from precoder powers.

    Returns ``{"bs_users": [K_m ...], "user_bs": [M_k ...], "joint": [bool ...]}``.
    """
    K = len(weights)
    M = len(weights[0]) if K else 0
    power = np.array([[float(np.vdot(weights[k][m], weights[k][m]).real) for m in range(M)] for k in range(K)])
    served = power > threshold
    bs_users = [sorted(np.flatnonzero(served[:, m]).tolist()) for m in range(M)]
    user_bs = [sorted(np.flatnonzero(served[k]).tolist()) for k in range(K)]
    return {"bs_users": bs_users, "user_bs": user_bs, "joint": [len(s) > 1 for s in user_bs]}


@dataclass
class KktReport:
    status: str  # "pass", "fail" or "not-applicable"
    scores: np.ndarray | None = None  # scores[k, m]
    served: np.ndarray | None = None
    equality_error: np.ndarray | None = None  # |lambda_k * score - 1| on served pairs
    max_score_gap: np.ndarray | None = None  # relative shortfall of served scores vs the user's best
    bound_violation: float = 0.0  # max(lambda_k * score - 1) over all pairs
    message: str = ""

    @property
    def passed(self) -> bool:
        return self.status == "pass"


def kkt_check(problem: sdp.SdpProblem, solution: sdp.SdpSolution, weights=None, rel_tol: float = 1e-3, served_share: float = 1e-3) -> KktReport:
    """Stationarity diagnostic for the all-active program.

    ``B_{k,m} = w_m G_m + sum_{j != k} lambda_j c_j g_{j,m} g_{j,m}^H + mu_m G_m``
    with ``G_m = R_m^H R_m`` and ``g = R^H h``; the association score is
    ``g_{k,m}^H B_{k,m}^{-1} g_{k,m}``. A pair counts as served when it carries
    at least ``served_share`` of the user's transmit power.
    """
    if not solution.optimal or solution.lam is None or solution.mu is None:
        return KktReport("not-applicable", message="no optimal dual solution")
    if not problem.pattern.all():
        return KktReport("not-applicable", message="check needs every BS active")
    K, M = problem.n_users, problem.n_bs
    c = problem.sinr_targets
    lam, mu = solution.lam, solution.mu
    if weights is None:
        weights = [problem.antenna_weights(sdp.extract_blocks(problem, D)[0]) for D in solution.d_matrices]
    power = np.array([[float(np.vdot(weights[k][m], weights[k][m]).real) for m in range(M)] for k in range(K)])
    served = power >= served_share * np.maximum(power.sum(axis=1, keepdims=True), 1e-300)
    scores = np.zeros((K, M))
    for k in range(K):
        for m in range(M):
            G = problem.grams[m]
            B = (problem.weights[m] + mu[m]) * G
            for j in range(K):
                if j != k:
                    g = problem.eff[j][m]
                    B = B + lam[j] * c[j] * np.outer(g, g.conj())
            g = problem.eff[k][m]
            scores[k, m] = float(np.real(g.conj() @ np.linalg.solve(B, g)))
    eq_err = np.where(served, np.abs(lam[:, None] * scores - 1.0), 0.0)
    best = scores.max(axis=1, keepdims=True)
    gap = np.where(served, (best - scores) / np.maximum(best, 1e-300), 0.0)
    bound = float(np.max(lam[:, None] * scores - 1.0))
    ok = np.all(eq_err[served] <= rel_tol) and np.all(gap <= rel_tol) and bound <= rel_tol
    rate_users = c > 0
    msg = ""
    if np.any(rate_users & (lam <= 0)):
        ok = False
        msg = "zero multiplier on a user with a positive rate target"
    return KktReport("pass" if ok else "fail", scores, served, eq_err, gap, bound, msg)
