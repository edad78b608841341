"""Energy and CO2 accounting with explicit unit discipline.

Power is carried in watts, wall time in seconds, energy in watt-hours and
grid emission factors in kg CO2 per kWh. Because kg/kWh equals g/Wh, the
CO2 helpers multiply a factor by a watt-hour energy and return grams
directly, with no hidden unit conversions anywhere else.

Federated training runs `rounds` communication rounds in which
`clients_per_round` devices each train for the full round wall time.
Centralized training runs once on a single machine whose draw is scaled
by the data center's power usage effectiveness (PUE).
"""

from __future__ import annotations

import math
from dataclasses import dataclass

SECONDS_PER_HOUR = 3600.0


def _require_finite(name: str, value: float) -> None:
    if not isinstance(value, (int, float)) or isinstance(value, bool):
        raise ValueError(f"{name} must be a real number, got {value!r}")
    if not math.isfinite(value):
        raise ValueError(f"{name} must be finite, got {value!r}")


@dataclass(frozen=True)
class PowerDraw:
    """Average device power draw in watts."""

    watts: float

    def __post_init__(self) -> None:
        _require_finite("watts", self.watts)
        if self.watts < 0:
            raise ValueError(f"watts must be >= 0, got {self.watts}")


@dataclass(frozen=True)
class Duration:
    """Wall-clock time span in seconds."""

    seconds: float

    def __post_init__(self) -> None:
        _require_finite("seconds", self.seconds)
        if self.seconds < 0:
            raise ValueError(f"seconds must be >= 0, got {self.seconds}")

    @property
    def hours(self) -> float:
        return self.seconds / SECONDS_PER_HOUR


@dataclass(frozen=True)
class Energy:
    """Electrical energy in watt-hours."""

    watt_hours: float

    def __post_init__(self) -> None:
        _require_finite("watt_hours", self.watt_hours)
        if self.watt_hours < 0:
            raise ValueError(f"watt_hours must be >= 0, got {self.watt_hours}")


@dataclass(frozen=True)
class EmissionFactor:
    """Regional grid carbon intensity in kg CO2 per kWh (equals g per Wh)."""

    region_code: str
    kg_co2_per_kwh: float

    def __post_init__(self) -> None:
        if not self.region_code:
            raise ValueError("region_code must be non-empty")
        _require_finite("kg_co2_per_kwh", self.kg_co2_per_kwh)
        if self.kg_co2_per_kwh < 0:
            raise ValueError(f"kg_co2_per_kwh must be >= 0, got {self.kg_co2_per_kwh}")


@dataclass(frozen=True)
class Pue:
    """Power usage effectiveness of a data center; total draw / IT draw, >= 1."""

    ratio: float

    def __post_init__(self) -> None:
        _require_finite("ratio", self.ratio)
        if self.ratio < 1.0:
            raise ValueError(f"PUE ratio must be >= 1, got {self.ratio}")


# Common published PUE presets, ratio (dimensionless).
PUE_WORLD_AVERAGE = Pue(1.67)
PUE_GOOGLE = Pue(1.11)
PUE_AMAZON = Pue(1.2)
PUE_MICROSOFT = Pue(1.125)


@dataclass(frozen=True)
class FlRoundShape:
    """Shape of a federated run: how many rounds of how many clients at what cost.

    `round_time` is the full wall time of one round, with any local epochs
    already folded in (a round of 5 local epochs at 38.2 s each has
    round_time 191 s).
    """

    rounds: int
    clients_per_round: int
    round_time: Duration
    client_power: PowerDraw

    def __post_init__(self) -> None:
        if not isinstance(self.rounds, int) or self.rounds < 0:
            raise ValueError(f"rounds must be a non-negative integer, got {self.rounds!r}")
        if not isinstance(self.clients_per_round, int) or self.clients_per_round < 1:
            raise ValueError(
                f"clients_per_round must be a positive integer, got {self.clients_per_round!r}"
            )


def fl_round_energy(
    clients_per_round: int, round_time: Duration, client_power: PowerDraw
) -> Energy:
    """Energy one communication round draws across all selected clients.

    Every selected client runs for the full round wall time, so one round
    costs clients_per_round x round_time x client_power watt-hours.
    """
    if clients_per_round < 1:
        raise ValueError(f"clients_per_round must be >= 1, got {clients_per_round}")
    return Energy(clients_per_round * (round_time.hours * client_power.watts))


def centralized_energy(pue: Pue, training_time: Duration, device_power: PowerDraw) -> Energy:
    """Energy a centralized run draws, inflated by the data center PUE."""
    return Energy(pue.ratio * (training_time.hours * device_power.watts))


def fl_co2_grams(shape: FlRoundShape, factor: EmissionFactor) -> float:
    """Total grams of CO2 emitted by a federated run of the given shape."""
    per_round = fl_round_energy(shape.clients_per_round, shape.round_time, shape.client_power)
    return shape.rounds * factor.kg_co2_per_kwh * per_round.watt_hours


def centralized_co2_grams(
    pue: Pue, training_time: Duration, device_power: PowerDraw, factor: EmissionFactor
) -> float:
    """Total grams of CO2 emitted by a centralized run."""
    return factor.kg_co2_per_kwh * centralized_energy(pue, training_time, device_power).watt_hours
