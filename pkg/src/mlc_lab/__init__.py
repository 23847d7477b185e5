"""Mutual information, repetition rates and coded link simulation for set-partitioned QPSK."""

from .channel import ChannelParams, RepetitionScheme, combine, snr_of, transmit, transmit_repeated
from .constellation import LabeledConstellation, Level, LevelSubset, map_bits, qpsk
from .demod import LlrPair, demap_frame, llr_high, llr_low
from .ldpc import DecodeResult, LdpcCode, decode_bp, encode, load_alist
from .mi import (ConvexityReport, MiCurve, MiPoint, conditional_density, is_convex_on,
                 mi_high, mi_low_expectation, mi_low_quadrature, mi_total_qpsk)
from .rates import GainPoint, RateLine, ar_points, crossover, line_from_mi
from .sim import BerRecord, SimConfig, run_point, snr_search

__version__ = "0.1.0"
