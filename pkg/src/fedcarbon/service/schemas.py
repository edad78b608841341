"""Request and response bodies for the HTTP service.

Requests reuse the library's own pydantic models (Scenario, SweepGrid) so
the service accepts exactly what the library validates. Responses are flat
JSON-friendly mirrors of the library's frozen dataclasses.
"""

from __future__ import annotations

from pydantic import BaseModel, ConfigDict, Field

from fedcarbon.simulator import Comparison, RoundLog, RunResult, SeedStudy
from fedcarbon.stores import HardwareProfile, LearningTrace, Scenario
from fedcarbon.sweep import SweepGrid, SweepPoint, SweepResult


class FactorOut(BaseModel):
    region_code: str
    kg_co2_per_kwh: float


class HardwareOut(BaseModel):
    name: str
    watts: float
    tdp_watts: float | None
    pue: float | None
    provenance: str

    @classmethod
    def from_profile(cls, profile: HardwareProfile) -> HardwareOut:
        return cls(
            name=profile.name,
            watts=profile.power.watts,
            tdp_watts=profile.tdp_watts,
            pue=profile.pue.ratio if profile.pue is not None else None,
            provenance=profile.provenance,
        )


class TraceOut(BaseModel):
    setup_id: str
    round_time_s: float
    clients_per_round: int
    local_epochs: int
    partitioning: str
    points: int
    max_accuracy: float
    last_round: int

    @classmethod
    def from_trace(cls, trace: LearningTrace) -> TraceOut:
        return cls(
            setup_id=trace.setup_id,
            round_time_s=trace.round_time.seconds,
            clients_per_round=trace.clients_per_round,
            local_epochs=trace.local_epochs,
            partitioning=trace.partitioning,
            points=len(trace.points),
            max_accuracy=trace.max_accuracy,
            last_round=trace.last_round,
        )


class RoundLogOut(BaseModel):
    round: int
    selected: list[int]
    accuracy: float
    cum_seconds: float
    cum_wh: float
    cum_co2_g: float

    @classmethod
    def from_log(cls, log: RoundLog) -> RoundLogOut:
        return cls(
            round=log.round_index,
            selected=list(log.selected_client_ids),
            accuracy=log.accuracy,
            cum_seconds=log.cumulative_seconds,
            cum_wh=log.cumulative_watt_hours,
            cum_co2_g=log.cumulative_co2_grams,
        )


class RunOut(BaseModel):
    scenario_id: str
    mode: str
    reached: bool
    rounds_to_target: int | None
    total_seconds: float
    total_wh: float
    total_co2_g: float
    max_accuracy: float
    logs: list[RoundLogOut] | None

    @classmethod
    def from_result(cls, result: RunResult, include_logs: bool = False) -> RunOut:
        logs = [RoundLogOut.from_log(log) for log in result.logs] if include_logs else None
        return cls(
            scenario_id=result.scenario_id,
            mode=result.mode,
            reached=result.reached,
            rounds_to_target=result.rounds_to_target,
            total_seconds=result.total_seconds,
            total_wh=result.total_watt_hours,
            total_co2_g=result.total_co2_grams,
            max_accuracy=result.max_accuracy,
            logs=logs,
        )


class EstimateRequest(BaseModel):
    model_config = ConfigDict(extra="forbid")

    scenario: Scenario
    include_logs: bool = False


class CompareRequest(BaseModel):
    model_config = ConfigDict(extra="forbid")

    fl: Scenario
    centralized: Scenario


class CompareOut(BaseModel):
    fl: RunOut
    centralized: RunOut
    co2_ratio: float | None
    wall_time_ratio: float | None

    @classmethod
    def from_comparison(cls, comparison: Comparison) -> CompareOut:
        return cls(
            fl=RunOut.from_result(comparison.fl),
            centralized=RunOut.from_result(comparison.centralized),
            co2_ratio=comparison.co2_ratio,
            wall_time_ratio=comparison.wall_time_ratio,
        )


class SweepRequest(BaseModel):
    model_config = ConfigDict(extra="forbid")

    grid: SweepGrid
    base: Scenario


class SweepPointOut(BaseModel):
    n: int
    local_epochs: int
    partitioning: str
    target: float | None
    trace_id: str
    rounds: int | None
    co2_g: float | None
    accuracy: float | None
    carbon_cost: float | None
    na_reason: str | None

    @classmethod
    def from_point(cls, point: SweepPoint) -> SweepPointOut:
        return cls(
            n=point.clients_per_round,
            local_epochs=point.local_epochs,
            partitioning=point.partitioning,
            target=point.target,
            trace_id=point.trace_id,
            rounds=point.rounds,
            co2_g=point.co2_grams,
            accuracy=point.accuracy,
            carbon_cost=point.carbon_cost,
            na_reason=point.na_reason,
        )


class SweepOut(BaseModel):
    points: list[SweepPointOut]
    best: SweepPointOut | None
    scored: int
    na: int

    @classmethod
    def from_result(cls, result: SweepResult) -> SweepOut:
        best = SweepPointOut.from_point(result.best) if result.best is not None else None
        return cls(
            points=[SweepPointOut.from_point(point) for point in result.points],
            best=best,
            scored=len(result.scored),
            na=len(result.na),
        )


class SimulateRequest(BaseModel):
    model_config = ConfigDict(extra="forbid")

    scenario: Scenario
    seeds: int = Field(default=20, ge=1, le=1000)


class SeedStudyOut(BaseModel):
    partitioning: str
    seeds: int
    reached: int
    rounds: list[int]
    mean_rounds: float | None
    stddev_rounds: float | None

    @classmethod
    def from_study(cls, study: SeedStudy) -> SeedStudyOut:
        return cls(
            partitioning=study.partitioning,
            seeds=study.seeds,
            reached=study.reached,
            rounds=list(study.rounds),
            mean_rounds=study.mean_rounds,
            stddev_rounds=study.stddev_rounds,
        )


class SimulateOut(BaseModel):
    iid: SeedStudyOut
    non_iid: SeedStudyOut
