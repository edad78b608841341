"""Grid sweeps over federated setups, scored by CO2 and carbon cost.

For every combination of clients per round, local epoch count and shard
skew in a `SweepGrid`, the sweep looks up the matching recorded trace,
reads off how many rounds that setup needs (to cross a fixed accuracy
target, or to first hit its best accuracy in stable mode) and prices
those rounds in grams of CO2. `carbon_cost` divides the grams by the
accuracy they bought, so cheap-but-weak and pricey-but-accurate setups
rank on a single axis. Setups whose trace is missing or never reaches
the target come back as NA rows instead of failing the whole sweep.
"""

from __future__ import annotations

import csv
import json
import math
from dataclasses import dataclass
from pathlib import Path
from typing import Literal

from pydantic import BaseModel, ConfigDict, Field, field_validator

from fedcarbon.emissions import Duration, EmissionFactor, PowerDraw
from fedcarbon.stores import DataStoreError, ResolutionError, Scenario, Stores

SWEEP_CSV_HEADER = [
    "n",
    "local_epochs",
    "partitioning",
    "target",
    "rounds",
    "co2_g",
    "accuracy",
    "carbon_cost",
    "na_reason",
]

SCATTER_CSV_HEADER = ["co2_g", "accuracy", "label"]

STABLE_TARGET_LABEL = "stable"


def co2_objective(
    rounds: int,
    clients_per_round: int,
    round_time: Duration,
    client_power: PowerDraw,
    factor: EmissionFactor,
    comm_overhead_wh: float = 0.0,
) -> float:
    """Grams of CO2 for a federated run, plus optional per-client comms energy.

    With zero overhead this is exactly the closed-form product used by the
    per-round estimator.
    """
    if rounds < 0:
        raise ValueError(f"rounds must be >= 0, got {rounds}")
    if clients_per_round < 1:
        raise ValueError(f"clients_per_round must be >= 1, got {clients_per_round}")
    if comm_overhead_wh < 0:
        raise ValueError(f"comm_overhead_wh must be >= 0, got {comm_overhead_wh}")
    per_round_wh = clients_per_round * (
        round_time.hours * client_power.watts + comm_overhead_wh
    )
    return rounds * factor.kg_co2_per_kwh * per_round_wh


def carbon_cost(co2_grams: float, accuracy: float) -> float:
    """Grams emitted per unit of accuracy achieved; lower is better."""
    if accuracy <= 0.0:
        raise ValueError(f"carbon cost needs a positive accuracy, got {accuracy}")
    if co2_grams < 0.0:
        raise ValueError(f"co2_grams must be >= 0, got {co2_grams}")
    return co2_grams / accuracy


class SweepGrid(BaseModel):
    """The axes of a sweep and how each point is scored."""

    model_config = ConfigDict(extra="forbid")

    trace_prefix: str = Field(min_length=1)
    clients_per_round: list[int] = Field(min_length=1)
    local_epochs: list[int] = Field(min_length=1)
    partitioning: list[Literal["IID", "NON_IID"]] = Field(min_length=1)
    accuracy_targets: list[float] = Field(min_length=1)
    stable_accuracy_mode: bool = False
    comm_overhead_wh: float = Field(default=0.0, ge=0)

    @field_validator("clients_per_round", "local_epochs")
    @classmethod
    def positive_counts(cls, values: list[int]) -> list[int]:
        for value in values:
            if value < 1:
                raise ValueError(f"grid counts must be >= 1, got {value}")
        return values

    @field_validator("accuracy_targets")
    @classmethod
    def targets_in_unit_interval(cls, values: list[float]) -> list[float]:
        for value in values:
            if not 0.0 < value <= 1.0:
                raise ValueError(f"accuracy targets must be in (0, 1], got {value}")
        return values

    def trace_id(self, clients_per_round: int, local_epochs: int, partitioning: str) -> str:
        skew = "iid" if partitioning == "IID" else "noniid"
        return f"{self.trace_prefix}_{skew}_{local_epochs}ep_n{clients_per_round:02d}"


def load_grid(path: str | Path) -> SweepGrid:
    try:
        with open(path) as handle:
            raw = json.load(handle)
    except json.JSONDecodeError as exc:
        raise DataStoreError(f"{path}: invalid JSON: {exc}") from exc
    try:
        return SweepGrid.model_validate(raw)
    except Exception as exc:  # pydantic.ValidationError
        raise DataStoreError(f"{path}: {exc}") from exc


@dataclass(frozen=True)
class SweepPoint:
    """One scored (or NA) cell of the sweep grid.

    `target` is the accuracy threshold the rounds refer to, or None for a
    stable-accuracy cell scored at the trace's best accuracy.
    """

    clients_per_round: int
    local_epochs: int
    partitioning: str
    target: float | None
    trace_id: str
    rounds: int | None
    co2_grams: float | None
    accuracy: float | None
    carbon_cost: float | None
    na_reason: str | None

    @property
    def is_na(self) -> bool:
        return self.na_reason is not None


@dataclass(frozen=True)
class SweepResult:
    """All sweep points ordered by carbon cost, NA rows last."""

    points: tuple[SweepPoint, ...]
    best: SweepPoint | None

    @property
    def scored(self) -> tuple[SweepPoint, ...]:
        return tuple(point for point in self.points if not point.is_na)

    @property
    def na(self) -> tuple[SweepPoint, ...]:
        return tuple(point for point in self.points if point.is_na)


def _na_point(
    clients_per_round: int,
    local_epochs: int,
    partitioning: str,
    target: float | None,
    trace_id: str,
    reason: str,
) -> SweepPoint:
    return SweepPoint(
        clients_per_round=clients_per_round,
        local_epochs=local_epochs,
        partitioning=partitioning,
        target=target,
        trace_id=trace_id,
        rounds=None,
        co2_grams=None,
        accuracy=None,
        carbon_cost=None,
        na_reason=reason,
    )


def _sort_key(point: SweepPoint) -> tuple:
    cost = math.inf if point.carbon_cost is None else point.carbon_cost
    return (
        point.is_na,
        cost,
        point.clients_per_round,
        point.local_epochs,
        point.partitioning,
        point.target is None,
    )


def sweep(grid: SweepGrid, base: Scenario, stores: Stores) -> SweepResult:
    """Score every grid cell against the traces, using the base scenario's siting."""
    if base.mode != "FL" or base.fl is None:
        raise DataStoreError(f"{base.id}: sweeps need an FL base scenario")
    if base.fl.epoch_time_s is None:
        raise DataStoreError(
            f"{base.id}: sweeps need fl.epoch_time_s to scale the local epoch count"
        )
    epoch_seconds = base.fl.epoch_time_s
    power = PowerDraw(stores.profile(base.hardware).power.watts * base.hardware_overhead)
    factor = stores.factor(base.region)

    def scored(
        clients: int,
        epochs: int,
        partitioning: str,
        target: float | None,
        trace_id: str,
        rounds: int,
        accuracy: float,
    ) -> SweepPoint:
        grams = co2_objective(
            rounds,
            clients,
            Duration(epoch_seconds * epochs),
            power,
            factor,
            grid.comm_overhead_wh,
        )
        return SweepPoint(
            clients_per_round=clients,
            local_epochs=epochs,
            partitioning=partitioning,
            target=target,
            trace_id=trace_id,
            rounds=rounds,
            co2_grams=grams,
            accuracy=accuracy,
            carbon_cost=carbon_cost(grams, accuracy),
            na_reason=None,
        )

    points: list[SweepPoint] = []
    for clients in grid.clients_per_round:
        for epochs in grid.local_epochs:
            for partitioning in grid.partitioning:
                trace_id = grid.trace_id(clients, epochs, partitioning)
                try:
                    trace = stores.trace(trace_id)
                except ResolutionError:
                    for target in grid.accuracy_targets:
                        points.append(
                            _na_point(clients, epochs, partitioning, target, trace_id, "missing_trace")
                        )
                    if grid.stable_accuracy_mode:
                        points.append(
                            _na_point(clients, epochs, partitioning, None, trace_id, "missing_trace")
                        )
                    continue
                for target in grid.accuracy_targets:
                    rounds = trace.rounds_to_accuracy(target)
                    if rounds is None:
                        points.append(
                            _na_point(
                                clients, epochs, partitioning, target, trace_id, "target_unreachable"
                            )
                        )
                        continue
                    points.append(
                        scored(
                            clients,
                            epochs,
                            partitioning,
                            target,
                            trace_id,
                            rounds,
                            trace.accuracy_at(rounds),
                        )
                    )
                if grid.stable_accuracy_mode:
                    stable_rounds, stable_accuracy = trace.stable_point
                    points.append(
                        scored(
                            clients,
                            epochs,
                            partitioning,
                            None,
                            trace_id,
                            stable_rounds,
                            stable_accuracy,
                        )
                    )

    ordered = sorted(points, key=_sort_key)
    best = next((point for point in ordered if not point.is_na), None)
    return SweepResult(points=tuple(ordered), best=best)


def pareto_front(points: list[SweepPoint]) -> tuple[SweepPoint, ...]:
    """Non-dominated points: no other point emits less while scoring at least as well.

    Returned in ascending CO2 order. NA points are ignored.
    """
    scored = [point for point in points if not point.is_na]
    order = sorted(scored, key=lambda p: (p.co2_grams, -p.accuracy))
    front: list[SweepPoint] = []
    best_accuracy = -math.inf
    best_co2 = math.inf
    for point in order:
        if point.accuracy > best_accuracy:
            front.append(point)
            best_accuracy = point.accuracy
            best_co2 = point.co2_grams
        elif point.accuracy == best_accuracy and point.co2_grams == best_co2:
            front.append(point)
    return tuple(front)


def _format_target(target: float | None) -> str:
    return STABLE_TARGET_LABEL if target is None else repr(target)


def write_sweep_csv(points: list[SweepPoint] | tuple[SweepPoint, ...], path: str | Path) -> None:
    """One row per sweep point; NA rows keep their reason and blank metrics."""
    with open(path, "w", newline="") as handle:
        writer = csv.writer(handle)
        writer.writerow(SWEEP_CSV_HEADER)
        for point in points:
            if point.is_na:
                metrics = ["", "", "", ""]
            else:
                metrics = [
                    str(point.rounds),
                    repr(point.co2_grams),
                    repr(point.accuracy),
                    repr(point.carbon_cost),
                ]
            writer.writerow(
                [
                    point.clients_per_round,
                    point.local_epochs,
                    point.partitioning,
                    _format_target(point.target),
                    *metrics,
                    point.na_reason or "",
                ]
            )


def read_sweep_csv(path: str | Path) -> list[dict[str, str]]:
    with open(path, newline="") as handle:
        reader = csv.DictReader(handle)
        if reader.fieldnames != SWEEP_CSV_HEADER:
            raise DataStoreError(f"{path}: expected header {','.join(SWEEP_CSV_HEADER)}")
        return [row for row in reader if row.get("n")]


def scatter_label(point: SweepPoint) -> str:
    skew = "iid" if point.partitioning == "IID" else "noniid"
    return f"n{point.clients_per_round:02d}_{point.local_epochs}ep_{skew}"


def write_scatter_csv(
    points: list[SweepPoint] | tuple[SweepPoint, ...], path: str | Path
) -> None:
    """CO2 against accuracy for plotting; NA points are skipped."""
    with open(path, "w", newline="") as handle:
        writer = csv.writer(handle)
        writer.writerow(SCATTER_CSV_HEADER)
        for point in points:
            if point.is_na:
                continue
            writer.writerow([repr(point.co2_grams), repr(point.accuracy), scatter_label(point)])
