"""Privacy-minimizing message learning for distributed sensor-network event detection."""

from .config import SimConfig
from .engine import RunRecord, SweepSpec, run_simulation, run_sweep

__all__ = ["SimConfig", "RunRecord", "SweepSpec", "run_simulation", "run_sweep"]
__version__ = "0.1.0"
