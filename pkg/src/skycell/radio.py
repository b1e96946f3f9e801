"""Link-level radio quantities: codebooks, power sets, SINR, probing.

All powers are linear watts internally; dBm appears only at configuration
boundaries. sinr_all is the ground-truth observer (it sees every cross link),
probe_measurements is the over-the-air observer (it sees only what a receiver
can measure with a two-phase mute-and-listen protocol).
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .channel import ChannelSet, array_response


@dataclass(frozen=True)
class Codebook:
    """Unit-norm beamforming codewords, one per row, with their steering angles."""

    codewords: np.ndarray
    angles: np.ndarray

    def __post_init__(self):
        self.codewords.setflags(write=False)
        self.angles.setflags(write=False)

    @property
    def size(self) -> int:
        return self.codewords.shape[0]

    @property
    def num_antennas(self) -> int:
        return self.codewords.shape[1]


def dft_codebook(num_antennas: int, size: int) -> Codebook:
    """Beam codebook steering at sin(theta_i) = -1 + (2i + 1) / size.

    The grid is uniform in sin space and symmetric about broadside. Rows are
    scaled by 1/sqrt(M); with size == num_antennas the rows are orthonormal.
    """
    if size < 1 or num_antennas < 1:
        raise ValueError("codebook dimensions must be positive")
    angles = np.arcsin(-1.0 + (2.0 * np.arange(size) + 1.0) / size)
    rows = np.empty((size, num_antennas), np.complex128)
    for i in range(size):
        rows[i] = array_response(float(angles[i]), num_antennas) / math.sqrt(num_antennas)
    return Codebook(codewords=rows, angles=angles)


@dataclass(frozen=True)
class PowerSet:
    """Discrete transmit power levels in dBm, ascending."""

    levels_dbm: np.ndarray

    def __post_init__(self):
        self.levels_dbm.setflags(write=False)
        if self.levels_dbm.ndim != 1 or self.levels_dbm.size < 1:
            raise ValueError("levels_dbm must be a nonempty vector")
        if np.any(np.diff(self.levels_dbm) <= 0):
            raise ValueError("levels_dbm must be strictly increasing")

    @property
    def num_levels(self) -> int:
        return self.levels_dbm.size

    def watts(self) -> np.ndarray:
        return 10.0 ** ((self.levels_dbm - 30.0) / 10.0)


def default_power_set() -> PowerSet:
    """Ten levels, 21 dBm through 30 dBm in 1 dB steps."""
    return PowerSet(levels_dbm=np.arange(21.0, 31.0, 1.0))


@dataclass
class TxConfig:
    """Per-cell transmit choice: index into the power set and the codebook."""

    power_idx: np.ndarray
    beam_idx: np.ndarray

    def copy(self) -> "TxConfig":
        return TxConfig(self.power_idx.copy(), self.beam_idx.copy())


@dataclass(frozen=True)
class LinkBudget:
    """Ground-truth per-cell link accounting for one transmit configuration."""

    signal_w: float
    interference_w: float
    noise_w: float
    sinr: float
    snr: float
    rate: float


@dataclass(frozen=True)
class MeasurementReport:
    """What one receiver can infer over the air, without cross-link knowledge."""

    rssi_w: float
    rsrp_w: float
    rsrq: float
    measured_sinr: float


def noise_power_watts(bandwidth_hz: float, noise_figure_db: float) -> float:
    """Thermal noise floor: -174 dBm/Hz plus bandwidth and receiver noise figure."""
    dbm = -174.0 + 10.0 * math.log10(bandwidth_hz) + noise_figure_db
    return 10.0 ** ((dbm - 30.0) / 10.0)


def received_power(p_watts: float, h: np.ndarray, w: np.ndarray) -> float:
    """P |h^H w|^2 for a single link and codeword."""
    if h.shape != w.shape:
        raise ValueError(f"channel shape {h.shape} does not match codeword {w.shape}")
    amp = np.vdot(h, w)
    return p_watts * (amp.real * amp.real + amp.imag * amp.imag)


def _rx_matrix(channels: ChannelSet, tx: TxConfig, codebook: Codebook,
               powers: PowerSet) -> np.ndarray:
    """R[j, l] = power received at user l from transmitter j under tx."""
    selected = codebook.codewords[tx.beam_idx]
    amp = np.einsum("jlm,jm->jl", np.conj(channels.h), selected)
    p = powers.watts()[tx.power_idx]
    return p[:, None] * (amp.real * amp.real + amp.imag * amp.imag)


def _cross_power_sum(r: np.ndarray, l: int) -> float:
    # fsum keeps the interference total correctly rounded, which in turn keeps
    # the probe identity tight even when the serving power is far below it
    return math.fsum(r[j, l] for j in range(r.shape[0]) if j != l)


def sinr_all(channels: ChannelSet, tx: TxConfig, codebook: Codebook,
             powers: PowerSet, noise_watts: float) -> list[LinkBudget]:
    """Ground-truth SINR, SNR and spectral efficiency of every cell."""
    r = _rx_matrix(channels, tx, codebook, powers)
    out = []
    for l in range(channels.num_cells):
        signal = r[l, l]
        interference = _cross_power_sum(r, l)
        sinr = signal / (interference + noise_watts)
        out.append(LinkBudget(
            signal_w=float(signal),
            interference_w=float(interference),
            noise_w=noise_watts,
            sinr=float(sinr),
            snr=float(signal / noise_watts),
            rate=float(np.log2(1.0 + sinr)),
        ))
    return out


def sum_rate(budgets: list[LinkBudget]) -> float:
    """Network spectral efficiency in bit/s/Hz, the sum of per-cell rates."""
    return float(sum(b.rate for b in budgets))


def probe_measurements(channels: ChannelSet, tx: TxConfig, codebook: Codebook,
                       powers: PowerSet, noise_watts: float) -> list[MeasurementReport]:
    """Receiver-side measurements from a two-phase probing protocol.

    Phase A mutes the serving transmitter, so the receiver hears interference
    plus noise; phase B turns everything on, so it hears signal plus
    interference plus noise. The difference recovers the serving power without
    any cross-link knowledge. Channels are assumed unchanged between phases.
    """
    r = _rx_matrix(channels, tx, codebook, powers)
    n = channels.num_cells
    out = []
    for l in range(n):
        phase_a = _cross_power_sum(r, l) + noise_watts
        phase_b = math.fsum(r[j, l] for j in range(n)) + noise_watts
        serving = phase_b - phase_a
        out.append(MeasurementReport(
            rssi_w=float(phase_b),
            rsrp_w=float(serving),
            rsrq=float(serving / phase_b),
            measured_sinr=float(serving / phase_a),
        ))
    return out
