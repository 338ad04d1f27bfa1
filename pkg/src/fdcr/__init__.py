"""Robust min-max interference-leakage beamforming for a full-duplex
cognitive-radio base station.

Set ``FDCR_DISABLE_NUMBA=1`` before import to run the pure-numpy kernels.
"""

__version__ = "0.1.0"

from ._accel import USE_NUMBA
from .channel import ChannelRealization, SystemConfig, draw_geometry, draw_realization
from .oracle import audit, worst_case_quadratic
from .problem import ConicProblem, RobustInstance, build_relaxed, hd_sinr_target
from .recovery import BeamformingSolution, recover
from .schemes import SCHEMES, run_scheme
from .solver import SolverSettings, solve

__all__ = [
    "__version__",
    "USE_NUMBA",
    "SystemConfig",
    "ChannelRealization",
    "draw_geometry",
    "draw_realization",
    "ConicProblem",
    "RobustInstance",
    "build_relaxed",
    "hd_sinr_target",
    "SolverSettings",
    "solve",
    "BeamformingSolution",
    "recover",
    "audit",
    "worst_case_quadratic",
    "SCHEMES",
    "run_scheme",
]
