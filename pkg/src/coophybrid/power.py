"""BS power accounting: hardware, RF transmit and silent-mode power."""

from __future__ import annotations

from dataclasses import asdict, dataclass

import numpy as np

from .analog import Architecture, check_architecture


def dbm_to_watt(dbm: float) -> float:
    return 10.0 ** ((dbm - 30.0) / 10.0)


def watt_to_dbm(watt: float) -> float:
    return 10.0 * np.log10(watt) + 30.0


@dataclass(frozen=True)
class HardwareProfile:
    """Component powers in watts; defaults are the reference hardware values."""

    p_ps: float = 0.040
    p_dac: float = 0.200
    p_rf: float = 0.040
    loss_factor: float = 0.15
    pa_efficiency: float = 0.3
    silent_scalar: float = 0.5
    p_max: float = dbm_to_watt(55.0)
    weight: float = 1.0

    def __post_init__(self):
        if min(self.p_ps, self.p_dac, self.p_rf, self.p_max) < 0:
            raise ValueError("component powers must be non-negative")
        if not 0.0 <= self.loss_factor < 1.0:
            raise ValueError("loss_factor must lie in [0, 1)")
        if not 0.0 < self.pa_efficiency <= 1.0:
            raise ValueError("pa_efficiency must lie in (0, 1]")
        if not 0.0 <= self.silent_scalar <= 1.0:
            raise ValueError("silent_scalar must lie in [0, 1]")
        if self.weight <= 0:
            raise ValueError("weight must be positive")

    @property
    def eta_prime(self) -> float:
        return 1.0 / (self.pa_efficiency * (1.0 - self.loss_factor))

    def as_dict(self) -> dict:
        return asdict(self)


TABLE1 = HardwareProfile()


def ps_count(architecture, n_antennas: int, n_rf: int) -> int:
    arch = Architecture.parse(architecture)
    if arch is Architecture.FDP:
        return 0
    if arch is Architecture.FHP:
        return n_rf * n_antennas
    return n_antennas


def hw_power(architecture, n_antennas: int, n_rf: int, profile: HardwareProfile = TABLE1) -> float:
    n_ps = ps_count(architecture, n_antennas, n_rf)
    return (n_ps * profile.p_ps + n_rf * (profile.p_dac + profile.p_rf)) / (1.0 - profile.loss_factor)


def tx_power(precoders) -> float:
    """Sum of squared norms of one BS's per-user precoders."""
    return float(sum(np.vdot(w, w).real for w in precoders))


def bs_power(p_tx: float, active: bool, architecture, n_antennas: int, n_rf: int, profile: HardwareProfile = TABLE1) -> float:
    p_hw = hw_power(architecture, n_antennas, n_rf, profile)
    if active:
        return profile.eta_prime * p_tx + p_hw
    if p_tx > 0:
        raise ValueError("a silent BS cannot transmit")
    return profile.silent_scalar * p_hw


@dataclass(frozen=True)
class BaseStation:
    """Static description of one BS (array, RF chains, architecture, hardware)."""

    n_antennas: int
    n_rf: int
    architecture: Architecture
    profile: HardwareProfile = TABLE1

    def __post_init__(self):
        object.__setattr__(self, "architecture", Architecture.parse(self.architecture))
        check_architecture(self.architecture, self.n_antennas, self.n_rf)

    @property
    def hw_power(self) -> float:
        return hw_power(self.architecture, self.n_antennas, self.n_rf, self.profile)

    def power(self, p_tx: float, active: bool) -> float:
        return bs_power(p_tx, active, self.architecture, self.n_antennas, self.n_rf, self.profile)

    @classmethod
    def make(cls, architecture, n_antennas: int, n_rf: int, profile: HardwareProfile = TABLE1) -> "BaseStation":
        arch = Architecture.parse(architecture)
        if arch is Architecture.FDP:
            n_rf = n_antennas
        return cls(n_antennas, n_rf, arch, profile)
