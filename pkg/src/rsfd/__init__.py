"""Distortion-aware power allocation for a full-duplex decode-and-forward relay with rate splitting."""

from .benchmarks import SchemeId, solve_hd, solve_odl, solve_orl, solve_realization, solve_rs, solve_rs_nd
from .channel import ChannelRealization, Precoders, generate_channels, mrt_precoders
from .config import SystemConfig, default_config, format_config, load_config, parse_config
from .distortion import RateCoefficients, build_coefficients
from .estimator import PowerAllocator
from .harness import ExperimentSpec, SweepResult, emit_csv, run_experiment
from .rates import PowerAllocation, RateReport, total_rate
from .solver import SolverOptions, SolveTrace, sia_solve
from .validation import ConfigError

__all__ = [
    "SchemeId",
    "solve_hd",
    "solve_odl",
    "solve_orl",
    "solve_realization",
    "solve_rs",
    "solve_rs_nd",
    "ChannelRealization",
    "Precoders",
    "generate_channels",
    "mrt_precoders",
    "SystemConfig",
    "default_config",
    "format_config",
    "load_config",
    "parse_config",
    "RateCoefficients",
    "build_coefficients",
    "PowerAllocator",
    "ExperimentSpec",
    "SweepResult",
    "emit_csv",
    "run_experiment",
    "PowerAllocation",
    "RateReport",
    "total_rate",
    "SolverOptions",
    "SolveTrace",
    "sia_solve",
    "ConfigError",
]
