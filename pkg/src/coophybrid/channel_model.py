"""Clustered narrow-band and OFDM mmWave channels with LOS/NLOS path loss.

Channels are stored per (user, BS) pair because BSs may carry different
array sizes. Every pair draws from its own RNG substream derived from
``(seed, realization, k, m)`` so generation order does not matter.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

SPEED_OF_LIGHT = 299_792_458.0
DEFAULT_CARRIER_HZ = 28e9


@dataclass(frozen=True)
class PathLossParams:
    wavelength: float = SPEED_OF_LIGHT / DEFAULT_CARRIER_HZ
    exponent_los: float = 2.1
    exponent_nlos: float = 3.4
    shadow_sigma_los_db: float = 3.6
    shadow_sigma_nlos_db: float = 9.7
    blockage_beta: float = 0.01

    def __post_init__(self):
        if self.wavelength <= 0:
            raise ValueError("wavelength must be positive")
        if self.exponent_los <= 0 or self.exponent_nlos <= 0:
            raise ValueError("path-loss exponents must be positive")
        if self.shadow_sigma_los_db < 0 or self.shadow_sigma_nlos_db < 0:
            raise ValueError("shadowing deviations must be non-negative")
        if self.blockage_beta < 0:
            raise ValueError("blockage_beta must be non-negative")


@dataclass(frozen=True)
class ClusterParams:
    n_clusters: int = 2
    n_rays: int = 20
    sector_min_deg: float = -90.0
    sector_max_deg: float = 90.0
    angular_spread_deg: float = 10.0
    # rays are kept within +-truncation*spread of the cluster mean
    truncation: float = 2.0

    def __post_init__(self):
        if self.n_clusters < 1 or self.n_rays < 1:
            raise ValueError("need at least one cluster and one ray")
        if not self.sector_min_deg < self.sector_max_deg:
            raise ValueError("sector_min_deg must be below sector_max_deg")
        if self.angular_spread_deg <= 0:
            raise ValueError("angular_spread_deg must be positive")


@dataclass
class ChannelSet:
    """Single-carrier channels ``channels[k][m]`` (length ``N_m``)."""

    channels: list[list[np.ndarray]]
    los: np.ndarray
    path_loss: np.ndarray

    @property
    def n_users(self) -> int:
        return len(self.channels)

    @property
    def n_bs(self) -> int:
        return len(self.channels[0])

    def h(self, k: int, m: int) -> np.ndarray:
        return self.channels[k][m]

    def subset_bs(self, keep) -> "ChannelSet":
        keep = list(keep)
        return ChannelSet(
            [[row[m] for m in keep] for row in self.channels],
            self.los[:, keep].copy(),
            self.path_loss[:, keep].copy(),
        )


@dataclass
class OfdmChannelSet:
    """Frequency-domain channels ``channels[k][m]`` of shape ``(N_s, N_m)``."""

    channels: list[list[np.ndarray]]
    los: np.ndarray
    path_loss: np.ndarray
    n_subcarriers: int = field(init=False)

    def __post_init__(self):
        self.n_subcarriers = self.channels[0][0].shape[0]
        if self.n_subcarriers < 1:
            raise ValueError("need at least one subcarrier")

    @property
    def n_users(self) -> int:
        return len(self.channels)

    @property
    def n_bs(self) -> int:
        return len(self.channels[0])

    def subcarrier(self, ns: int) -> ChannelSet:
        return ChannelSet(
            [[h[ns] for h in row] for row in self.channels], self.los.copy(), self.path_loss.copy()
        )

    def summed(self) -> ChannelSet:
        """Channels summed over subcarriers (used to design the shared analog stage)."""
        return ChannelSet(
            [[h.sum(axis=0) for h in row] for row in self.channels], self.los.copy(), self.path_loss.copy()
        )


def array_response(theta, n_antennas: int) -> np.ndarray:
    """Half-wavelength ULA response, unit norm.

    ``theta`` may be a scalar (returns shape ``(N,)``) or an array of angles
    (returns shape ``theta.shape + (N,)``).
    """
    if n_antennas < 1:
        raise ValueError("n_antennas must be >= 1")
    theta = np.asarray(theta, dtype=float)
    idx = np.arange(n_antennas)
    phase = np.pi * np.sin(theta)[..., None] * idx
    return np.exp(1j * phase) / math.sqrt(n_antennas)


def sample_los(distance: float, params: PathLossParams, rng: np.random.Generator) -> bool:
    if distance < 0:
        raise ValueError("distance must be non-negative")
    p_los = math.exp(-params.blockage_beta * distance)
    return bool(rng.random() < p_los)


def path_loss_db(distance: float, is_los: bool, params: PathLossParams, rng: np.random.Generator | None = None) -> float:
    """Close-in free-space reference path loss in dB, shadowing included."""
    if distance < 1.0:
        raise ValueError("distance must be at least 1 m")
    if is_los:
        exponent, sigma = params.exponent_los, params.shadow_sigma_los_db
    else:
        exponent, sigma = params.exponent_nlos, params.shadow_sigma_nlos_db
    shadow = 0.0
    if sigma > 0:
        if rng is None:
            raise ValueError("rng required when shadowing is enabled")
        shadow = sigma * rng.standard_normal()
    fspl_1m = 20.0 * math.log10(4.0 * math.pi / params.wavelength)
    return fspl_1m + 10.0 * exponent * math.log10(distance) + shadow


def db_to_linear_loss(pl_db: float) -> float:
    return 10.0 ** (-pl_db / 10.0)


def _truncated_laplace(rng, mean, scale, lo, hi, size):
    """Inverse-CDF draw from a Laplace(mean, scale) restricted to [lo, hi]."""

    def cdf(x):
        z = (x - mean) / scale
        return np.where(z < 0, 0.5 * np.exp(z), 1.0 - 0.5 * np.exp(-z))

    u = cdf(lo) + rng.random(size) * (cdf(hi) - cdf(lo))
    return np.where(
        u < 0.5,
        mean + scale * np.log(2.0 * u),
        mean - scale * np.log(2.0 * (1.0 - u)),
    )


def draw_angles(cluster: ClusterParams, rng: np.random.Generator) -> np.ndarray:
    """AODs in radians, shape ``(N_cl, N_ray)``."""
    lo, hi = math.radians(cluster.sector_min_deg), math.radians(cluster.sector_max_deg)
    spread = math.radians(cluster.angular_spread_deg)
    means = rng.uniform(lo, hi, size=cluster.n_clusters)
    # Laplace scale b gives standard deviation sqrt(2)*b
    scale = spread / math.sqrt(2.0)
    out = np.empty((cluster.n_clusters, cluster.n_rays))
    for i, mu in enumerate(means):
        a = max(lo, mu - cluster.truncation * spread)
        b = min(hi, mu + cluster.truncation * spread)
        out[i] = _truncated_laplace(rng, mu, scale, a, b, cluster.n_rays)
    return out


def _clamped_distance(bs_pos, user_pos) -> float:
    d = float(np.hypot(*(np.asarray(user_pos, float) - np.asarray(bs_pos, float))))
    if not math.isfinite(d):
        raise ValueError("positions must be finite")
    return max(d, 1.0)


def _pair_draw(bs_pos, user_pos, n_antennas, cluster, pl, rng, path_gains, angles):
    """Shared draw for single-carrier and OFDM channels.

    Returns per-cluster ray sums (shape ``(N_cl, N)``), the amplitude scale,
    the LOS flag and the linear path loss.
    """
    d = _clamped_distance(bs_pos, user_pos)
    los = sample_los(d, pl, rng)
    rho = db_to_linear_loss(path_loss_db(d, los, pl, rng))
    if angles is None:
        angles = draw_angles(cluster, rng)
    if path_gains is None:
        shape = (cluster.n_clusters, cluster.n_rays)
        path_gains = (rng.standard_normal(shape) + 1j * rng.standard_normal(shape)) / math.sqrt(2.0)
    path_gains = np.broadcast_to(np.asarray(path_gains, dtype=complex), angles.shape)
    resp = array_response(angles, n_antennas)  # (N_cl, N_ray, N)
    cluster_sums = np.einsum("il,iln->in", path_gains, resp)
    amp = math.sqrt(rho * n_antennas / (cluster.n_clusters * cluster.n_rays))
    return cluster_sums, amp, los, rho


def draw_ofdm_channel(
    bs_pos,
    user_pos,
    n_antennas: int,
    cluster: ClusterParams,
    pl: PathLossParams,
    rng: np.random.Generator,
    n_subcarriers: int,
    *,
    path_gains=None,
    angles=None,
):
    """Frequency-domain channel ``(N_s, N)`` plus LOS flag and path loss.

    Each cluster ``i`` (1-based) is rotated by ``exp(-j 2 pi n_s i / N_s)``
    on subcarrier ``n_s``; gains and AODs are shared across subcarriers.
    """
    if n_subcarriers < 1:
        raise ValueError("n_subcarriers must be >= 1")
    cluster_sums, amp, los, rho = _pair_draw(bs_pos, user_pos, n_antennas, cluster, pl, rng, path_gains, angles)
    ns = np.arange(n_subcarriers)[:, None]
    ci = np.arange(1, cluster.n_clusters + 1)[None, :]
    rot = np.exp(-2j * np.pi * ns * ci / n_subcarriers)
    rot[0, :] = 1.0  # exact for n_s = 0
    h = amp * (rot @ cluster_sums)
    return h, los, rho


def draw_channel(
    bs_pos,
    user_pos,
    n_antennas: int,
    cluster: ClusterParams,
    pl: PathLossParams,
    rng: np.random.Generator,
    *,
    path_gains=None,
    angles=None,
):
    """Narrow-band clustered channel.

    ``path_gains`` and ``angles`` override the random ray gains / AODs
    (used by tests and by fixed-geometry experiments).
    """
    h, los, rho = draw_ofdm_channel(
        bs_pos, user_pos, n_antennas, cluster, pl, rng, 1, path_gains=path_gains, angles=angles
    )
    return h[0], los, rho


def pair_rng(seed: int, realization: int, k: int, m: int) -> np.random.Generator:
    return np.random.default_rng(np.random.SeedSequence([seed, realization, 1, k, m]))


def draw_channel_set(
    bs_positions,
    user_positions,
    n_antennas,
    cluster: ClusterParams,
    pl: PathLossParams,
    seed: int,
    realization: int = 0,
    n_subcarriers: int | None = None,
):
    """Draw every (user, BS) pair; returns ChannelSet or OfdmChannelSet.

    ``n_antennas`` is an int or a per-BS sequence.
    """
    M, K = len(bs_positions), len(user_positions)
    if np.isscalar(n_antennas):
        n_antennas = [int(n_antennas)] * M
    chans = [[None] * M for _ in range(K)]
    los = np.zeros((K, M), dtype=bool)
    rho = np.zeros((K, M))
    for k in range(K):
        for m in range(M):
            rng = pair_rng(seed, realization, k, m)
            h, los[k, m], rho[k, m] = draw_ofdm_channel(
                bs_positions[m], user_positions[k], n_antennas[m], cluster, pl, rng, n_subcarriers or 1
            )
            chans[k][m] = h if n_subcarriers is not None else h[0]
    if n_subcarriers is None:
        return ChannelSet(chans, los, rho)
    return OfdmChannelSet(chans, los, rho)


def write_channel_dump(path, chset: ChannelSet, seed: int) -> None:
    """Text dump: one ``# k m N seed`` header per pair, then one ``re im`` line per entry."""
    with open(path, "w") as fh:
        fh.write(f"# users {chset.n_users} bs {chset.n_bs} seed {seed}\n")
        for k in range(chset.n_users):
            for m in range(chset.n_bs):
                h = chset.h(k, m)
                fh.write(f"# k {k} m {m} N {h.size} seed {seed} los {int(chset.los[k, m])} rho {float(chset.path_loss[k, m])!r}\n")
                for v in h:
                    fh.write(f"{float(v.real)!r} {float(v.imag)!r}\n")


def read_channel_dump(path) -> tuple[ChannelSet, int]:
    with open(path) as fh:
        lines = fh.read().splitlines()
    head = lines[0].split()
    K, M, seed = int(head[2]), int(head[4]), int(head[6])
    chans = [[None] * M for _ in range(K)]
    los = np.zeros((K, M), dtype=bool)
    rho = np.zeros((K, M))
    i = 1
    while i < len(lines):
        f = lines[i].split()
        k, m, n = int(f[2]), int(f[4]), int(f[6])
        los[k, m] = bool(int(f[10]))
        rho[k, m] = float(f[12])
        vals = [tuple(map(float, ln.split())) for ln in lines[i + 1 : i + 1 + n]]
        chans[k][m] = np.array([complex(a, b) for a, b in vals])
        i += 1 + n
    return ChannelSet(chans, los, rho), seed
