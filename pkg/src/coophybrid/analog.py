"""Closed-form equal-gain analog precoders (FHP, PHP, OFDM) and beam patterns."""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass
from enum import Enum

import numpy as np

from .channel_model import ChannelSet, OfdmChannelSet, array_response

log = logging.getLogger(__name__)


class Architecture(str, Enum):
    FDP = "FDP"
    FHP = "FHP"
    PHP = "PHP"

    @classmethod
    def parse(cls, value) -> "Architecture":
        if isinstance(value, cls):
            return value
        try:
            return cls(str(value).upper())
        except ValueError:
            raise ValueError(f"unknown architecture {value!r}; expected FDP, FHP or PHP") from None


def check_architecture(arch: Architecture, n_antennas: int, n_rf: int) -> None:
    if n_antennas < 1 or n_rf < 1:
        raise ValueError("antenna and RF-chain counts must be positive")
    if arch is Architecture.FDP and n_antennas != n_rf:
        raise ValueError(f"FDP needs N == L (got N={n_antennas}, L={n_rf})")
    if arch is Architecture.PHP and n_antennas % n_rf:
        raise ValueError(f"PHP needs N/L integer (got N={n_antennas}, L={n_rf})")
    if arch is not Architecture.FDP and n_rf > n_antennas:
        raise ValueError("more RF chains than antennas")


@dataclass
class AnalogPrecoder:
    """Analog stage of one BS.

    ``n_served`` is the number of leading columns steered at users; the
    remaining columns (only present when K < L) carry no digital power.
    """

    matrix: np.ndarray
    architecture: Architecture
    n_served: int

    @property
    def n_antennas(self) -> int:
        return self.matrix.shape[0]

    @property
    def n_rf(self) -> int:
        return self.matrix.shape[1]

    @property
    def active_matrix(self) -> np.ndarray:
        """Columns that can carry digital power."""
        if self.architecture is Architecture.FDP:
            return self.matrix
        return self.matrix[:, : self.n_served]


def _phases(h: np.ndarray) -> np.ndarray:
    # np.angle(0) == 0, which is the documented choice for zero entries
    return np.exp(1j * np.angle(h))


def egt_fhp(channels, n_rf: int) -> AnalogPrecoder:
    """Fully-connected EGT: column k co-phases user k's channel.

    ``channels`` is a sequence of K channel vectors for one BS.
    """
    channels = [np.asarray(h) for h in channels]
    K, N = len(channels), channels[0].size
    if K > n_rf:
        raise ValueError(f"{K} users exceed {n_rf} RF chains")
    check_architecture(Architecture.FHP, N, n_rf)
    amp = 1.0 / math.sqrt(n_rf * N)
    R = np.full((N, n_rf), amp, dtype=complex)
    for k, h in enumerate(channels):
        R[:, k] = amp * _phases(h)
    return AnalogPrecoder(R, Architecture.FHP, K)


def egt_php(channels, n_rf: int) -> AnalogPrecoder:
    """Partially-connected EGT: subarray k co-phases user k's channel on that subarray."""
    channels = [np.asarray(h) for h in channels]
    K, N = len(channels), channels[0].size
    if K > n_rf:
        raise ValueError(f"{K} users exceed {n_rf} RF chains")
    check_architecture(Architecture.PHP, N, n_rf)
    sub = N // n_rf
    amp = 1.0 / math.sqrt(N)
    R = np.zeros((N, n_rf), dtype=complex)
    for k in range(n_rf):
        rows = slice(k * sub, (k + 1) * sub)
        R[rows, k] = amp * (_phases(channels[k][rows]) if k < K else 1.0)
    return AnalogPrecoder(R, Architecture.PHP, K)


def fdp_precoder(n_antennas: int) -> AnalogPrecoder:
    return AnalogPrecoder(np.eye(n_antennas, dtype=complex), Architecture.FDP, n_antennas)


def egt(channels, architecture, n_rf: int) -> AnalogPrecoder:
    arch = Architecture.parse(architecture)
    if arch is Architecture.FDP:
        n = np.asarray(channels[0]).size
        check_architecture(arch, n, n_rf)
        return fdp_precoder(n)
    if arch is Architecture.FHP:
        return egt_fhp(channels, n_rf)
    return egt_php(channels, n_rf)


_cancel_warned = False


def egt_ofdm(channels, architecture, n_rf: int) -> AnalogPrecoder:
    """EGT on the subcarrier-summed channel.

    ``channels`` holds K arrays of shape ``(N_s, N)`` for one BS. A user
    whose summed channel cancels exactly falls back to subcarrier 0.
    """
    global _cancel_warned
    summed, cancelled = [], []
    for k, hs in enumerate(channels):
        hs = np.atleast_2d(hs)
        hbar = hs[0] if hs.shape[0] == 1 else hs.sum(axis=0)
        scale = np.abs(hs).sum()
        if scale > 0 and not np.any(np.abs(hbar) > 1e-12 * scale):
            cancelled.append(k)
            hbar = hs[0]
        summed.append(hbar)
    if cancelled:
        # with integer cluster delays 1..N_cl < N_s every cluster sums to zero over the band
        level = logging.DEBUG if _cancel_warned else logging.WARNING
        log.log(level, "summed channel cancels for users %s; using subcarrier-0 phases", cancelled)
        _cancel_warned = True
    return egt(summed, architecture, n_rf)


def analog_precoders(chset, architecture, n_rf) -> list[AnalogPrecoder]:
    """One analog precoder per BS; OFDM channel sets use the summed channel."""
    M = chset.n_bs
    n_rf = [n_rf] * M if np.isscalar(n_rf) else list(n_rf)
    archs = [architecture] * M if isinstance(architecture, (str, Architecture)) else list(architecture)
    out = []
    for m in range(M):
        col = [row[m] for row in chset.channels]
        if isinstance(chset, OfdmChannelSet):
            out.append(egt_ofdm(col, archs[m], n_rf[m]))
        else:
            out.append(egt(col, archs[m], n_rf[m]))
    return out


def beam_pattern(w, theta_grid) -> np.ndarray:
    """Normalized gain ``|a(theta)^H w|^2`` in dB (0 dB at the grid maximum).

    ``w`` may be a vector or an ``(N, n)`` matrix whose columns add up in power.
    """
    w = np.asarray(w, dtype=complex)
    if w.ndim == 1:
        w = w[:, None]
    if not np.any(w):
        raise ValueError("beam pattern of a zero precoder")
    A = array_response(np.asarray(theta_grid, float), w.shape[0])
    gain = (np.abs(A.conj() @ w) ** 2).sum(axis=1)
    peak = gain.max()
    with np.errstate(divide="ignore"):
        return 10.0 * np.log10(gain / peak)


def main_lobes(pattern_db, theta_grid, count: int) -> np.ndarray:
    """Angles of the ``count`` highest local maxima of a pattern."""
    p = np.asarray(pattern_db)
    inner = (p[1:-1] >= p[:-2]) & (p[1:-1] >= p[2:])
    idx = np.flatnonzero(inner) + 1
    for edge in (0, len(p) - 1):
        nb = 1 if edge == 0 else len(p) - 2
        if p[edge] >= p[nb]:
            idx = np.append(idx, edge)
    best = idx[np.argsort(p[idx])[::-1][:count]]
    return np.sort(np.asarray(theta_grid)[best])


def column_gain(h, r) -> float:
    return float(abs(np.vdot(h, r)))


def egt_gain(h, n_rf: int) -> float:
    """Closed-form optimum of the constant-modulus gain problem."""
    h = np.asarray(h)
    return float(np.abs(h).sum() / math.sqrt(n_rf * h.size))
