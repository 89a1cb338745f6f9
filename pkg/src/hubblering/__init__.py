"""Phonons in expanding and contracting ring condensates: simulation and global fits."""
__version__ = "0.1.0"

from .model import (  # noqa: F401
    ModelParams,
    PhononState,
    RampProfile,
    density_from_phase,
    damping,
    hubble_rate,
    omega,
    peak_time,
    quality_factor,
    radius,
    radius_rate,
    speed_of_sound,
)
from .integrator import Trajectory, accumulated_phase, integrate, seed_state  # noqa: F401
