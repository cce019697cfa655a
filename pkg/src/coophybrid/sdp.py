"""Digital precoding as a semidefinite program (relaxed P1 / envelope P2).

The relaxed program in ``D_k = d_k d_k^H`` is

    min   sum_k Tr(Rhat D_k) + const
    s.t.  Tr(D_k Hhat_k) - c_k sum_{j != k} Tr(D_j Hhat_k) >= c_k sigma_k^2
          sum_k Tr(Q_m D_k) <= z_m Pmax_m
          D_k >= 0

with ``c_k = 2**tau_k - 1``. It is handed to CVXOPT in Lagrange-dual form:
the free variables are the multipliers ``(lambda, mu)`` and every user
contributes one linear matrix inequality. The PSD precoder matrices come
back as the cone duals. Hermitian blocks use the real embedding
``M -> [[Re M, -Im M], [Im M, Re M]]`` with ``Tr(D M) = Tr(emb(M) Z) / 2``.

Silent BSs are removed from the program rather than constrained to zero
power. Fully digital BSs are posed on the span of their users' channels,
which is exact: a component orthogonal to every channel only costs power.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field

import numpy as np
from cvxopt import matrix, solvers

from .analog import AnalogPrecoder, Architecture
from .channel_model import ChannelSet
from .power import BaseStation

log = logging.getLogger(__name__)

OPTIMAL = "optimal"
INFEASIBLE = "infeasible"
NUMERICAL_FAILURE = "numerical-failure"

SOLVER_OPTIONS = {
    "show_progress": False,
    "reltol": 1e-7,
    "feastol": 1e-8,
    "abstol": 1e-10,
    "maxiters": 100,
}
RANK_TOL = 1e-4
# caps are tightened so that solver-tolerance violations stay below Pmax
CAP_MARGIN = 1e-7
FDP_COST_WARN_DIM = 128


@dataclass
class SdpProblem:
    """One instance of the digital-precoding program.

    ``bases[m]`` maps the digital vector ``d_{k,m}`` to antenna weights
    ``w_{k,m}``; for hybrid BSs it is the active part of ``R_m``.
    """

    bases: list[np.ndarray]
    eff: list[list[np.ndarray]]  # eff[k][m] = bases[m]^H h_{k,m}
    weights: np.ndarray  # per-BS objective weight b_m * eta'_m (or eta-hat)
    targets: np.ndarray
    noise: np.ndarray
    p_max: np.ndarray
    pattern: np.ndarray
    constant: float
    envelope: bool = False
    grams: list[np.ndarray] = field(init=False)

    def __post_init__(self):
        self.grams = [B.conj().T @ B for B in self.bases]
        self.targets = np.asarray(self.targets, float)
        self.noise = np.asarray(self.noise, float)
        self.pattern = np.asarray(self.pattern, bool)
        if np.any(self.targets < 0):
            raise ValueError("targets must be non-negative")
        if np.any(self.noise <= 0):
            raise ValueError("noise powers must be positive")

    @property
    def n_users(self) -> int:
        return len(self.eff)

    @property
    def n_bs(self) -> int:
        return len(self.bases)

    @property
    def block_sizes(self) -> list[int]:
        return [B.shape[1] for B in self.bases]

    @property
    def offsets(self) -> np.ndarray:
        return np.concatenate([[0], np.cumsum(self.block_sizes)])

    @property
    def dim(self) -> int:
        return int(sum(self.block_sizes))

    @property
    def sinr_targets(self) -> np.ndarray:
        return 2.0 ** self.targets - 1.0

    def _blockdiag(self, blocks) -> np.ndarray:
        out = np.zeros((self.dim, self.dim), dtype=complex)
        off = self.offsets
        for m, blk in enumerate(blocks):
            out[off[m] : off[m + 1], off[m] : off[m + 1]] = blk
        return out

    def r_hat(self) -> np.ndarray:
        return self._blockdiag([w * G for w, G in zip(self.weights, self.grams)])

    def q(self, m: int) -> np.ndarray:
        return self._blockdiag([G if i == m else np.zeros_like(G) for i, G in enumerate(self.grams)])

    def h_hat(self, k: int) -> np.ndarray:
        return self._blockdiag([np.outer(g, g.conj()) for g in self.eff[k]])

    def split(self, d: np.ndarray) -> list[np.ndarray]:
        off = self.offsets
        return [d[off[m] : off[m + 1]] for m in range(self.n_bs)]

    def antenna_weights(self, d: np.ndarray) -> list[np.ndarray]:
        return [B @ dm for B, dm in zip(self.bases, self.split(d))]

    def to_text(self) -> str:
        """Sparse-triplet dump of objective and constraint matrices."""
        lines = [f"# sdp dim {self.dim} users {self.n_users} bs {self.n_bs} envelope {int(self.envelope)}"]
        lines.append(f"constant {self.constant!r}")

        def dump(name, M):
            lines.append(f"matrix {name}")
            for i, j in zip(*np.nonzero(np.abs(M) > 0)):
                lines.append(f"{i} {j} {float(M[i, j].real)!r} {float(M[i, j].imag)!r}")

        dump("objective", self.r_hat())
        for k in range(self.n_users):
            lines.append(f"rate {k} sinr {float(self.sinr_targets[k])!r} noise {float(self.noise[k])!r}")
            dump(f"H{k}", self.h_hat(k))
        for m in range(self.n_bs):
            lines.append(f"power {m} cap {float(self.pattern[m] * self.p_max[m])!r}")
            dump(f"Q{m}", self.q(m))
        return "\n".join(lines) + "\n"


@dataclass
class SdpSolution:
    status: str
    d_matrices: list[np.ndarray] | None = None
    objective: float = math.inf  # sum_k Tr(Rhat D_k) + constant
    lam: np.ndarray | None = None  # multipliers of the rate rows (as written above)
    mu: np.ndarray | None = None  # multipliers of the power rows (nan for removed BSs)
    per_bs_tx: np.ndarray | None = None
    iterations: int = 0
    gap: float = math.nan
    message: str = ""

    @property
    def optimal(self) -> bool:
        return self.status == OPTIMAL


def _span_basis(vectors, n: int) -> np.ndarray:
    H = np.column_stack(vectors) if vectors else np.zeros((n, 0))
    U, s, _ = np.linalg.svd(H, full_matrices=False)
    keep = s > 1e-12 * (s[0] if s.size else 0.0)
    if not np.any(keep):
        return np.eye(n, 1, dtype=complex)
    return U[:, keep]


def assemble(
    analog: list[AnalogPrecoder],
    channels: ChannelSet,
    targets,
    noise,
    pattern,
    stations: list[BaseStation],
    *,
    envelope: bool = False,
    eta_hat=None,
    compress_fdp: bool = True,
) -> SdpProblem:
    """Build the program for one silence pattern.

    With ``envelope=True`` the per-BS weight uses the convex-envelope slope
    (``eta_hat`` if given, otherwise its initial value) and the constant is
    ``a * sum_m b_m P_hw,m``; all BSs must then be active.
    """
    K, M = channels.n_users, channels.n_bs
    pattern = np.asarray(pattern, bool)
    if pattern.shape != (M,):
        raise ValueError("pattern length must equal the number of BSs")
    if not pattern.any():
        raise ValueError("all-silent pattern: rate constraints cannot be met")
    targets = np.broadcast_to(np.asarray(targets, float), (K,)).copy()
    noise = np.broadcast_to(np.asarray(noise, float), (K,)).copy()

    bases = []
    for m, (ap, st) in enumerate(zip(analog, stations)):
        if ap.architecture is Architecture.FDP and compress_fdp:
            bases.append(_span_basis([channels.h(k, m) for k in range(K)], ap.n_antennas))
        else:
            if ap.architecture is Architecture.FDP and ap.n_antennas > FDP_COST_WARN_DIM:
                log.warning("uncompressed FDP block of dimension %d; cost grows cubically", ap.n_antennas)
            bases.append(ap.active_matrix)
    eff = [[bases[m].conj().T @ channels.h(k, m) for m in range(M)] for k in range(K)]

    b = np.array([st.profile.weight for st in stations])
    p_hw = np.array([st.hw_power for st in stations])
    a = np.array([st.profile.silent_scalar for st in stations])
    p_max = np.array([st.profile.p_max for st in stations])
    eta_p = np.array([st.profile.eta_prime for st in stations])
    if envelope:
        if not pattern.all():
            raise ValueError("the envelope program keeps every BS active")
        if eta_hat is None:
            eta_hat = envelope_slope(stations)
        weights = b * np.asarray(eta_hat, float)
        constant = float(np.sum(a * b * p_hw))
    else:
        weights = b * eta_p
        z = pattern.astype(float)
        constant = float(np.sum(b * (z + a * (1.0 - z)) * p_hw))
    return SdpProblem(bases, eff, weights, targets, noise, p_max, pattern, constant, envelope)


def envelope_slope(stations, p_tx=None, eps: float = 0.0) -> np.ndarray:
    """Convex-envelope slope; ``p_tx=None`` gives the initial value at Pmax."""
    out = []
    for m, st in enumerate(stations):
        pr = st.profile
        denom = pr.p_max if p_tx is None else p_tx[m] + eps
        out.append((1.0 - pr.silent_scalar) * st.hw_power / denom + pr.eta_prime)
    return np.array(out)


def _embed(M: np.ndarray) -> np.ndarray:
    return np.block([[M.real, -M.imag], [M.imag, M.real]])


def _unembed(Z: np.ndarray) -> np.ndarray:
    n = Z.shape[0] // 2
    P, Q, R, S = Z[:n, :n], Z[:n, n:], Z[n:, :n], Z[n:, n:]
    D = 0.5 * (P + S) + 0.5j * (R - Q)
    return 0.5 * (D + D.conj().T)


def _quick_infeasible(problem: SdpProblem, active) -> bool:
    """Interference-free upper bound on each user's SNR is already short of target."""
    c = problem.sinr_targets
    for k in range(problem.n_users):
        if c[k] <= 0:
            continue
        best = 0.0
        for m in active:
            g = problem.eff[k][m]
            G = problem.grams[m]
            best += problem.p_max[m] * float(np.real(g.conj() @ np.linalg.pinv(G, hermitian=True) @ g))
        if best < c[k] * problem.noise[k] * (1.0 - 1e-9):
            return True
    return False


def solve(problem: SdpProblem, options: dict | None = None) -> SdpSolution:
    """Solve the relaxed program; see the module docstring for the formulation.

    If the default scaling stalls, a rough solve under a more conservative
    scaling is refined by re-scaling every row and LMI with the rough
    multipliers and user powers.
    """
    K, M = problem.n_users, problem.n_bs
    active = [m for m in range(M) if problem.pattern[m] and problem.block_sizes[m] > 0]
    c = problem.sinr_targets
    rate_users = [k for k in range(K) if c[k] > 0]
    for k in rate_users:
        if not any(np.any(problem.eff[k][m]) for m in active):
            return _infeasible(problem, "user has no channel to any active BS")
    if _quick_infeasible(problem, active):
        return _infeasible(problem, "single-user power bound below target")

    opts = dict(SOLVER_OPTIONS)
    if options:
        opts.update(options)
    prog = _Program(problem, active, rate_users)
    sol = prog.solve(*prog.exponent_scaling(*PRIMARY_SCALING), opts)
    if sol.status != NUMERICAL_FAILURE:
        return sol
    for exps in FALLBACK_SCALINGS:
        rough = prog.solve(*prog.exponent_scaling(*exps), opts)
        if rough.status == INFEASIBLE:
            return rough
        if rough.optimal:
            fine = prog.solve(*prog.solution_scaling(rough), opts)
            best = fine if fine.optimal and _violation(problem, fine) <= _violation(problem, rough) else rough
            best.message = "refined after rescaling" if best is fine else "conservative scaling"
            best.iterations += sol.iterations + rough.iterations
            return best
    return sol


# (rate-row, power-row, LMI) scaling exponents, see _Program.exponent_scaling;
# cvxopt is not scale invariant and these were tuned on random instances
PRIMARY_SCALING = (0.5, 1.0, 1.0)
FALLBACK_SCALINGS = ((0.5, 0.5, 0.5), (0.25, 0.0, 0.0))


def _violation(problem, sol) -> float:
    rep = verify_solution(sol, problem)
    return max(-rep.rate_residuals.min(initial=0.0), (rep.power_residuals / problem.p_max).max(initial=0.0), 0.0)


class _Program:
    """Solver data for one pattern; rows and LMIs can be rescaled freely."""

    def __init__(self, problem: SdpProblem, active, rate_users):
        self.problem, self.active, self.rate_users = problem, active, rate_users
        sizes = [problem.block_sizes[m] for m in active]
        self.n = int(sum(sizes))
        self.offs = np.concatenate([[0], np.cumsum(sizes)]).astype(int)
        c = problem.sinr_targets
        cost = self._blockdiag([problem.weights[m] * problem.grams[m] for m in active])
        # unit-norm cost; the solver measures certificates relative to it
        self.cost_scale = float(np.linalg.eigvalsh(cost)[-1]) or 1.0
        self.cost = cost / self.cost_scale
        self.gains = [self._blockdiag([np.outer(problem.eff[k][m], problem.eff[k][m].conj()) for m in active]) for k in rate_users]
        self.need = np.array([c[k] * problem.noise[k] for k in rate_users])
        self.gain_norm = np.array([float(np.linalg.eigvalsh(H)[-1]) for H in self.gains])
        self.caps = []
        for i in range(len(active)):
            self.caps.append(self._blockdiag([problem.grams[m] if j == i else np.zeros_like(problem.grams[m]) for j, m in enumerate(active)]))
        self.cap_rhs = np.array([problem.p_max[m] * (1.0 - CAP_MARGIN) for m in active])

    def _blockdiag(self, blocks):
        out = np.zeros((self.n, self.n), dtype=complex)
        for i, blk in enumerate(blocks):
            out[self.offs[i] : self.offs[i + 1], self.offs[i] : self.offs[i + 1]] = blk
        return out

    def exponent_scaling(self, alpha, beta, gamma):
        """Rate rows by need^a * |H|^(1-a), power rows by Pmax^b, LMI k by (need/|H|)^g."""
        rate = self.need**alpha * self.gain_norm ** (1 - alpha)
        power = self.cap_rhs**beta
        lmi = np.ones(self.problem.n_users)
        lmi[self.rate_users] = (self.need / self.gain_norm) ** gamma
        return rate, power, lmi

    def solution_scaling(self, sol):
        """Scale so that multipliers and PSD blocks of ``sol`` become O(1)."""
        lam = sol.lam[self.rate_users]
        rate, power, lmi = self.exponent_scaling(*PRIMARY_SCALING)
        ok = lam > 0
        rate[ok] = 1.0 / lam[ok]
        mu = sol.mu[self.active]
        okm = mu > 1e-9 / self.cap_rhs
        power[okm] = 1.0 / mu[okm]
        for k in self.rate_users:
            p = float(np.trace(sol.d_matrices[k]).real)
            if p > 0:
                lmi[k] = p
        return rate, power, lmi

    def solve(self, rate_scale, power_scale, lmi_scale, opts) -> SdpSolution:
        problem, K = self.problem, self.problem.n_users
        c = problem.sinr_targets
        rhs = np.concatenate([self.need / rate_scale, -self.cap_rhs / power_scale])
        n_rows = rhs.size
        # coefficient of D_j in every row; Tr(D M) = Tr(emb(M) Z) / 2
        Gs, hs = [], []
        for j in range(K):
            cols = []
            for r, k in enumerate(self.rate_users):
                coef = self.gains[r] / rate_scale[r]
                if j != k:
                    coef = -c[k] * coef
                cols.append(0.5 * _embed(coef).ravel(order="F"))
            for Q, ps in zip(self.caps, power_scale):
                cols.append(-0.5 * _embed(Q / ps).ravel(order="F"))
            Gs.append(matrix(lmi_scale[j] * np.column_stack(cols)))
            hs.append(matrix(lmi_scale[j] * 0.5 * _embed(self.cost)))
        try:
            res = solvers.sdp(
                matrix(-rhs),
                Gl=matrix(-np.eye(n_rows)),
                hl=matrix(np.zeros(n_rows)),
                Gs=Gs,
                hs=hs,
                options=opts,
            )
        except (ArithmeticError, ValueError) as exc:
            return SdpSolution(NUMERICAL_FAILURE, message=f"solver error: {exc}")

        status, iters = res["status"], int(res["iterations"])
        if status == "dual infeasible":
            if _valid_ray(np.array(res["x"]).ravel(), rhs, Gs):
                return _infeasible(problem, "solver certificate", iters)
            return SdpSolution(NUMERICAL_FAILURE, iterations=iters, message="invalid infeasibility certificate")
        if status == "unknown":
            cert = res.get("residual as dual infeasibility certificate")
            if cert is not None and cert < 1e-6 and _valid_ray(np.array(res["x"]).ravel(), rhs, Gs):
                return _infeasible(problem, "approximate solver certificate", iters)
            ok = (
                res["relative gap"] is not None
                and res["relative gap"] < 1e-5
                and res["primal infeasibility"] < 1e-6
                and res["dual infeasibility"] < 1e-6
            )
            if not ok:
                return SdpSolution(NUMERICAL_FAILURE, iterations=iters, message="solver stalled")
        elif status != "optimal":
            return SdpSolution(NUMERICAL_FAILURE, iterations=iters, message=status)

        y = np.array(res["x"]).ravel() * self.cost_scale
        D_full = []
        full_off = problem.offsets
        offs = self.offs
        for j in range(K):
            Dj = lmi_scale[j] * _unembed(np.array(res["zs"][j]))
            full = np.zeros((problem.dim, problem.dim), dtype=complex)
            for a_i, m in enumerate(self.active):
                for b_i, mm in enumerate(self.active):
                    full[full_off[m] : full_off[m + 1], full_off[mm] : full_off[mm + 1]] = Dj[
                        offs[a_i] : offs[a_i + 1], offs[b_i] : offs[b_i + 1]
                    ]
            D_full.append(full)

        nr = len(self.rate_users)
        lam = np.zeros(K)
        lam[self.rate_users] = np.maximum(y[:nr], 0.0) / rate_scale
        mu = np.full(problem.n_bs, np.nan)
        mu[self.active] = np.maximum(y[nr:], 0.0) / power_scale

        sol = SdpSolution(OPTIMAL, D_full, lam=lam, mu=mu, iterations=iters)
        sol.per_bs_tx = bs_tx_from_matrices(problem, D_full)
        Rh = problem.r_hat()
        sol.objective = float(sum(np.trace(Rh @ D).real for D in D_full)) + problem.constant
        sol.gap = res["relative gap"] if res["relative gap"] is not None else math.nan
        return sol


def _valid_ray(y, rhs, Gs, tol=1e-7) -> bool:
    """Check y >= 0, rhs.y > 0 and sum_i y_i A_i <= 0 in every LMI, relative to the term sizes."""
    ymax = np.abs(y).max()
    if not ymax > 0 or rhs @ y <= 0 or y.min() < -tol * ymax:
        return False
    for G in Gs:
        G = np.array(G)
        n = math.isqrt(G.shape[0])
        A = (G @ y).reshape(n, n, order="F")
        size = float(np.abs(G).max(axis=0) @ np.abs(y)) * n
        if np.linalg.eigvalsh((A + A.T) / 2)[-1] > tol * size:
            return False
    return True


def _infeasible(problem, msg, iterations=0):
    return SdpSolution(INFEASIBLE, iterations=iterations, message=msg)


def bs_tx_from_matrices(problem: SdpProblem, d_matrices) -> np.ndarray:
    off = problem.offsets
    out = np.zeros(problem.n_bs)
    for m, G in enumerate(problem.grams):
        sl = slice(off[m], off[m + 1])
        out[m] = sum(np.trace(G @ D[sl, sl]).real for D in d_matrices)
    return out


def extract_rank1(d_matrix: np.ndarray) -> tuple[np.ndarray, float]:
    """Dominant eigenvector scaled by the root of its eigenvalue.

    Returns ``(d, ratio)`` with ``ratio = lambda_2 / lambda_1``.
    """
    D = 0.5 * (d_matrix + d_matrix.conj().T)
    vals, vecs = np.linalg.eigh(D)
    top = vals[-1]
    if top <= 0:
        if vals[0] < -1e-8 * max(abs(top), 1e-300) and vals[0] < -1e-14:
            raise ValueError("matrix is not positive semidefinite")
        return np.zeros(D.shape[0], dtype=complex), 0.0
    if vals[0] < -1e-8 * top:
        raise ValueError(f"matrix is not positive semidefinite (min eigenvalue {vals[0]:.3e})")
    ratio = float(max(vals[-2], 0.0) / top) if vals.size > 1 else 0.0
    return math.sqrt(top) * vecs[:, -1], ratio


def extract_blocks(problem: SdpProblem, d_matrix: np.ndarray) -> tuple[np.ndarray, float]:
    """Rank-1 extraction per BS block.

    Every matrix in the program is block diagonal over BSs (the signal adds
    up in power across BSs), so the off-diagonal blocks of ``D_k`` are free
    and only the diagonal blocks carry information. The reported ratio is
    the worst over blocks holding a non-negligible share of the power.
    """
    off = problem.offsets
    total = max(float(np.trace(d_matrix).real), 0.0)
    parts, worst = [], 0.0
    for m in range(problem.n_bs):
        blk = d_matrix[off[m] : off[m + 1], off[m] : off[m + 1]]
        d, r = extract_rank1(blk)
        parts.append(d)
        if np.trace(blk).real > 1e-9 * total:
            worst = max(worst, r)
    return np.concatenate(parts), worst


@dataclass
class DigitalPrecoders:
    """Stacked digital precoders plus their antenna-domain weights."""

    d: list[np.ndarray]
    weights: list[list[np.ndarray]]  # weights[k][m] = w_{k,m}
    rank_ratios: np.ndarray
    rescale: float = 1.0
    flagged: bool = False

    def per_bs_tx(self) -> np.ndarray:
        M = len(self.weights[0]) if self.weights else 0
        return np.array([sum(float(np.vdot(row[m], row[m]).real) for row in self.weights) for m in range(M)])


def precoders_from_solution(problem: SdpProblem, solution: SdpSolution, channels: ChannelSet) -> DigitalPrecoders:
    """Rank-1 extraction with a common rescale when the relaxation is not tight."""
    ds, ratios = [], []
    for D in solution.d_matrices:
        d, r = extract_blocks(problem, D)
        ds.append(d)
        ratios.append(r)
    ratios = np.array(ratios)
    flagged = bool(np.any(ratios > RANK_TOL))
    weights = [problem.antenna_weights(d) for d in ds]
    out = DigitalPrecoders(ds, weights, ratios, 1.0, flagged)
    rates = evaluate_rates(weights, channels, problem.noise)
    if flagged or np.any(rates < problem.targets - 1e-6):
        out.rescale = _restore_rates(weights, channels, problem)
        if out.rescale > 1.0:
            ds = [out.rescale * d for d in ds]
            out.d = ds
            out.weights = [problem.antenna_weights(d) for d in ds]
        if flagged:
            log.info("rank ratio %.2e above tolerance; common rescale %.6f", ratios.max(), out.rescale)
    return out


def _restore_rates(weights, channels, problem, cap: float = 1.1) -> float:
    def ok(s):
        w = [[s * x for x in row] for row in weights]
        return np.all(evaluate_rates(w, channels, problem.noise) >= problem.targets - 1e-9)

    if ok(1.0):
        return 1.0
    if not ok(cap):
        log.warning("rate targets not restored within a common rescale of %.2f", cap)
        return cap
    lo, hi = 1.0, cap
    for _ in range(60):
        mid = 0.5 * (lo + hi)
        lo, hi = (lo, mid) if ok(mid) else (mid, hi)
    return hi


def evaluate_rates(weights, channels, noise) -> np.ndarray:
    """Spectral efficiency of every user from antenna-domain weights ``w[k][m]``."""
    if isinstance(channels, ChannelSet):
        chans = channels.channels
    else:
        chans = channels
    K, M = len(chans), len(chans[0])
    noise = np.broadcast_to(np.asarray(noise, float), (K,))
    gains = np.zeros((K, K))  # gains[k, j] = sum_m |h_{k,m}^H w_{j,m}|^2
    for k in range(K):
        for j in range(K):
            gains[k, j] = sum(abs(np.vdot(chans[k][m], weights[j][m])) ** 2 for m in range(M))
    signal = np.diag(gains)
    interference = gains.sum(axis=1) - signal
    return np.log2(1.0 + signal / (interference + noise))


def trace_rates(problem: SdpProblem, d_matrices) -> np.ndarray:
    """Spectral efficiency in trace form from ``D_k`` and the effective channels."""
    K = problem.n_users
    H = [problem.h_hat(k) for k in range(K)]
    out = np.zeros(K)
    for k in range(K):
        sig = np.trace(d_matrices[k] @ H[k]).real
        intf = sum(np.trace(d_matrices[j] @ H[k]).real for j in range(K) if j != k)
        out[k] = math.log2(1.0 + sig / (intf + problem.noise[k]))
    return out


@dataclass
class VerifyReport:
    rate_residuals: np.ndarray  # relative to the right-hand side c_k sigma_k^2
    power_residuals: np.ndarray  # watts
    min_eigenvalues: np.ndarray
    passed: bool


def verify_solution(solution: SdpSolution, problem: SdpProblem, tol: float = 1e-5) -> VerifyReport:
    if not solution.optimal:
        raise ValueError("verification needs an optimal solution")
    D = solution.d_matrices
    K = problem.n_users
    c = problem.sinr_targets
    H = [problem.h_hat(k) for k in range(K)]
    rate_res = np.zeros(K)
    for k in range(K):
        sig = np.trace(D[k] @ H[k]).real
        intf = sum(np.trace(D[j] @ H[k]).real for j in range(K) if j != k)
        if c[k] > 0:
            rate_res[k] = (sig - c[k] * intf) / (c[k] * problem.noise[k]) - 1.0
    tx = bs_tx_from_matrices(problem, D)
    pow_res = tx - problem.pattern.astype(float) * problem.p_max
    eigs = np.array([np.linalg.eigvalsh(0.5 * (Dk + Dk.conj().T))[0] for Dk in D])
    passed = bool(np.all(rate_res >= -tol) and np.all(pow_res <= tol) and np.all(eigs >= -tol))
    return VerifyReport(rate_res, pow_res, eigs, passed)
