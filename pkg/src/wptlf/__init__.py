"""Limited-feedback waveform codebooks for multi-antenna multi-sine power transfer."""

from .model import FrequencyGrid, RectennaParams, SystemDims, vout_compact, weighted_sum_vout
from .saa import SaaConfig, saa_optimize
from .codebook import Codebook, design_codebook, init_codebook, optimal_precoder_set
from .tree import TreeCodebook, design_tree
from .channel import ChannelConfig, draw_sample

__version__ = "0.1.0"

__all__ = [
    "ChannelConfig", "Codebook", "FrequencyGrid", "RectennaParams", "SaaConfig", "SystemDims",
    "TreeCodebook", "design_codebook", "design_tree", "draw_sample", "init_codebook",
    "optimal_precoder_set", "saa_optimize", "vout_compact", "weighted_sum_vout",
]
