"""Joint user scheduling and beamforming for short-packet downlink MISO."""

from .baselines import EsResult, exhaustive_search, shannon_schedule
from .channel import ChannelRealization, NetworkConfig, draw_channels, sinr
from .fbl_rate import FblParams, min_sinr, q_inv, rate, shannon_min_sinr, v_of
from .sca import (ScaConfig, ScaState, SchedulingSolution, prefilter, run, run_plain_and_tuned,
                  run_with_tuning)

__version__ = "0.1.0"

__all__ = [
    "EsResult", "exhaustive_search", "shannon_schedule",
    "ChannelRealization", "NetworkConfig", "draw_channels", "sinr",
    "FblParams", "min_sinr", "q_inv", "rate", "shannon_min_sinr", "v_of",
    "ScaConfig", "ScaState", "SchedulingSolution", "prefilter", "run", "run_plain_and_tuned",
    "run_with_tuning",
]
