"""Carbon accounting and simulation for federated versus centralized training."""

from __future__ import annotations

__version__ = "0.1.0"

from fedcarbon.emissions import (
    Duration,
    EmissionFactor,
    Energy,
    FlRoundShape,
    PowerDraw,
    Pue,
    centralized_co2_grams,
    centralized_energy,
    fl_co2_grams,
    fl_round_energy,
)

__all__ = [
    "__version__",
    "Duration",
    "EmissionFactor",
    "Energy",
    "FlRoundShape",
    "PowerDraw",
    "Pue",
    "centralized_co2_grams",
    "centralized_energy",
    "fl_co2_grams",
    "fl_round_energy",
]
