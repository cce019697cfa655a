"""Cooperative multi-cell mmWave hybrid beamforming with BS silent modes."""

from .analog import AnalogPrecoder, Architecture, analog_precoders, beam_pattern, egt_fhp, egt_ofdm, egt_php
from .channel_model import (
    ChannelSet,
    ClusterParams,
    OfdmChannelSet,
    PathLossParams,
    array_response,
    draw_channel,
    draw_ofdm_channel,
    path_loss_db,
    sample_los,
)
from .power import BaseStation, HardwareProfile, TABLE1, bs_power, hw_power, ps_count, tx_power
from .sdp import SdpProblem, SdpSolution, assemble, evaluate_rates, extract_rank1, solve, verify_solution
from .silence import AlgoResult, algorithm1, algorithm2, all_active, extract_association, kkt_check

__version__ = "0.1.0"
