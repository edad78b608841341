"""Loading and validation for the bundled reference data.

Three CSV stores ship with the package: regional grid emission factors,
hardware power profiles, and recorded learning traces (accuracy measured
after selected communication rounds, with per-setup metadata). Scenario
files are JSON and are validated strictly: unknown keys are rejected so a
typo fails loudly instead of silently using a default.

`FEDCARBON_DATA_DIR` overrides the bundled data directory; the file names
inside it are fixed.
"""

from __future__ import annotations

import csv
import json
import os
from dataclasses import dataclass
from importlib import resources
from pathlib import Path
from typing import Literal

from pydantic import BaseModel, ConfigDict, Field, model_validator

from fedcarbon.emissions import Duration, EmissionFactor, PowerDraw, Pue

EMISSION_FACTORS_FILE = "emission_factors.csv"
HARDWARE_FILE = "hardware.csv"
TRACES_FILE = "traces.csv"
TRACES_META_FILE = "traces_meta.csv"
DATA_DIR_ENV_VAR = "FEDCARBON_DATA_DIR"


class DataStoreError(ValueError):
    """A bundled or user-supplied data file is malformed or inconsistent."""


class ResolutionError(DataStoreError):
    """A scenario references a region, hardware profile or trace that is not loaded."""


def default_data_dir() -> Path:
    """The active data directory: the env override or the packaged data."""
    override = os.environ.get(DATA_DIR_ENV_VAR)
    if override:
        return Path(override)
    return Path(str(resources.files("fedcarbon") / "data"))


# ---------------------------------------------------------------------------
# emission factors


def load_emission_factors(path: str | Path) -> dict[str, EmissionFactor]:
    """Parse region,kg_co2_per_kwh rows; a third provenance column is allowed."""
    factors: dict[str, EmissionFactor] = {}
    with open(path, newline="") as handle:
        reader = csv.reader(handle)
        header = next(reader, None)
        if header is None or [h.strip() for h in header[:2]] != ["region", "kg_co2_per_kwh"]:
            raise DataStoreError(f"{path}: expected header region,kg_co2_per_kwh")
        for line_no, row in enumerate(reader, start=2):
            if not row or not "".join(row).strip():
                continue
            if len(row) < 2:
                raise DataStoreError(f"{path}:{line_no}: expected at least 2 columns")
            region = row[0].strip()
            if region in factors:
                raise DataStoreError(f"{path}:{line_no}: duplicate region {region!r}")
            try:
                value = float(row[1])
            except ValueError as exc:
                raise DataStoreError(f"{path}:{line_no}: bad factor {row[1]!r}") from exc
            try:
                factors[region] = EmissionFactor(region, value)
            except ValueError as exc:
                raise DataStoreError(f"{path}:{line_no}: {exc}") from exc
    if not factors:
        raise DataStoreError(f"{path}: no emission factors found")
    return factors


def serialize_emission_factors(factors: dict[str, EmissionFactor]) -> str:
    lines = ["region,kg_co2_per_kwh"]
    for region in sorted(factors):
        lines.append(f"{region},{factors[region].kg_co2_per_kwh!r}")
    return "\n".join(lines) + "\n"


# ---------------------------------------------------------------------------
# hardware profiles


@dataclass(frozen=True)
class HardwareProfile:
    """Average training power draw of a device, with optional bounds and siting."""

    name: str
    power: PowerDraw
    tdp_watts: float | None = None
    pue: Pue | None = None
    provenance: str = "paper"

    def __post_init__(self) -> None:
        if not self.name:
            raise ValueError("hardware name must be non-empty")
        if self.tdp_watts is not None and self.power.watts > self.tdp_watts:
            raise ValueError(
                f"{self.name}: power {self.power.watts} W exceeds TDP {self.tdp_watts} W"
            )


def load_hardware_profiles(path: str | Path) -> dict[str, HardwareProfile]:
    profiles: dict[str, HardwareProfile] = {}
    with open(path, newline="") as handle:
        reader = csv.DictReader(handle)
        required = {"name", "power_watts"}
        if reader.fieldnames is None or not required.issubset(set(reader.fieldnames)):
            raise DataStoreError(f"{path}: expected columns name,power_watts,...")
        for line_no, row in enumerate(reader, start=2):
            name = (row.get("name") or "").strip()
            if not name:
                continue
            if name in profiles:
                raise DataStoreError(f"{path}:{line_no}: duplicate hardware {name!r}")
            try:
                tdp_raw = (row.get("tdp_watts") or "").strip()
                pue_raw = (row.get("pue") or "").strip()
                profiles[name] = HardwareProfile(
                    name=name,
                    power=PowerDraw(float(row["power_watts"])),
                    tdp_watts=float(tdp_raw) if tdp_raw else None,
                    pue=Pue(float(pue_raw)) if pue_raw else None,
                    provenance=(row.get("provenance") or "paper").strip(),
                )
            except ValueError as exc:
                raise DataStoreError(f"{path}:{line_no}: {exc}") from exc
    if not profiles:
        raise DataStoreError(f"{path}: no hardware profiles found")
    return profiles


# ---------------------------------------------------------------------------
# learning traces


@dataclass(frozen=True)
class LearningTrace:
    """Recorded test accuracy after selected rounds of one training setup.

    Accuracy between recorded rounds is read step-wise: the value at round
    r is the accuracy of the last recorded round <= r, and 0.0 before the
    first record.
    """

    setup_id: str
    points: tuple[tuple[int, float], ...]
    round_time: Duration
    clients_per_round: int
    local_epochs: int
    partitioning: Literal["IID", "NON_IID"]

    def __post_init__(self) -> None:
        if not self.setup_id:
            raise ValueError("setup_id must be non-empty")
        if not self.points:
            raise ValueError(f"{self.setup_id}: trace needs at least one point")
        previous = 0
        for round_index, accuracy in self.points:
            if round_index < 1:
                raise ValueError(f"{self.setup_id}: rounds must be >= 1, got {round_index}")
            if round_index <= previous:
                raise ValueError(f"{self.setup_id}: rounds must be strictly increasing")
            if not 0.0 <= accuracy <= 1.0:
                raise ValueError(f"{self.setup_id}: accuracy {accuracy} outside [0, 1]")
            previous = round_index
        if self.clients_per_round < 1:
            raise ValueError(f"{self.setup_id}: clients_per_round must be >= 1")
        if self.local_epochs < 1:
            raise ValueError(f"{self.setup_id}: local_epochs must be >= 1")

    def accuracy_at(self, round_index: int) -> float:
        value = 0.0
        for recorded, accuracy in self.points:
            if recorded > round_index:
                break
            value = accuracy
        return value

    def rounds_to_accuracy(self, threshold: float) -> int | None:
        """First recorded round whose accuracy reaches the threshold, if any."""
        for recorded, accuracy in self.points:
            if accuracy >= threshold:
                return recorded
        return None

    @property
    def max_accuracy(self) -> float:
        return max(accuracy for _, accuracy in self.points)

    @property
    def stable_point(self) -> tuple[int, float]:
        """The first recorded round attaining the trace's best accuracy."""
        best = self.max_accuracy
        for recorded, accuracy in self.points:
            if accuracy == best:
                return recorded, accuracy
        raise AssertionError("unreachable: max accuracy comes from points")

    @property
    def last_round(self) -> int:
        return self.points[-1][0]


def load_traces(
    traces_path: str | Path, meta_path: str | Path
) -> dict[str, LearningTrace]:
    points: dict[str, list[tuple[int, float]]] = {}
    with open(traces_path, newline="") as handle:
        reader = csv.DictReader(handle)
        expected = ["setup_id", "round", "test_accuracy"]
        if reader.fieldnames != expected:
            raise DataStoreError(f"{traces_path}: expected header {','.join(expected)}")
        for line_no, row in enumerate(reader, start=2):
            setup_id = row["setup_id"].strip()
            if not setup_id:
                continue
            try:
                points.setdefault(setup_id, []).append(
                    (int(row["round"]), float(row["test_accuracy"]))
                )
            except ValueError as exc:
                raise DataStoreError(f"{traces_path}:{line_no}: {exc}") from exc

    traces: dict[str, LearningTrace] = {}
    with open(meta_path, newline="") as handle:
        reader = csv.DictReader(handle)
        expected = [
            "setup_id",
            "round_time_s",
            "clients_per_round",
            "local_epochs",
            "partitioning",
        ]
        if reader.fieldnames != expected:
            raise DataStoreError(f"{meta_path}: expected header {','.join(expected)}")
        for line_no, row in enumerate(reader, start=2):
            setup_id = row["setup_id"].strip()
            if not setup_id:
                continue
            if setup_id in traces:
                raise DataStoreError(f"{meta_path}:{line_no}: duplicate setup {setup_id!r}")
            if setup_id not in points:
                raise DataStoreError(
                    f"{meta_path}:{line_no}: setup {setup_id!r} has no trace points"
                )
            partitioning = row["partitioning"].strip()
            if partitioning not in ("IID", "NON_IID"):
                raise DataStoreError(
                    f"{meta_path}:{line_no}: partitioning must be IID or NON_IID"
                )
            try:
                traces[setup_id] = LearningTrace(
                    setup_id=setup_id,
                    points=tuple(sorted(points[setup_id])),
                    round_time=Duration(float(row["round_time_s"])),
                    clients_per_round=int(row["clients_per_round"]),
                    local_epochs=int(row["local_epochs"]),
                    partitioning=partitioning,  # type: ignore[arg-type]
                )
            except ValueError as exc:
                raise DataStoreError(f"{meta_path}:{line_no}: {exc}") from exc
    orphans = set(points) - set(traces)
    if orphans:
        raise DataStoreError(f"{traces_path}: setups missing metadata: {sorted(orphans)}")
    return traces


def serialize_traces(traces: dict[str, LearningTrace]) -> tuple[str, str]:
    """Emit (traces_csv, meta_csv) text that parses back to an equal mapping."""
    point_lines = ["setup_id,round,test_accuracy"]
    meta_lines = ["setup_id,round_time_s,clients_per_round,local_epochs,partitioning"]
    for setup_id in sorted(traces):
        trace = traces[setup_id]
        for round_index, accuracy in trace.points:
            point_lines.append(f"{setup_id},{round_index},{accuracy!r}")
        meta_lines.append(
            f"{setup_id},{trace.round_time.seconds!r},{trace.clients_per_round},"
            f"{trace.local_epochs},{trace.partitioning}"
        )
    return "\n".join(point_lines) + "\n", "\n".join(meta_lines) + "\n"


# ---------------------------------------------------------------------------
# scenarios (JSON, strict)


class FlSection(BaseModel):
    """Shape of the federated side of a scenario."""

    model_config = ConfigDict(extra="forbid")

    total_clients: int = Field(ge=1)
    clients_per_round: int = Field(ge=1)
    local_epochs: int = Field(ge=1)
    partitioning: Literal["IID", "NON_IID"]
    round_time_s: float | None = Field(default=None, gt=0)
    epoch_time_s: float | None = Field(default=None, gt=0)
    max_rounds: int = Field(default=500, ge=1)
    selection_seed: int = 0

    @model_validator(mode="after")
    def check_shape(self) -> FlSection:
        if self.clients_per_round > self.total_clients:
            raise ValueError(
                f"clients_per_round {self.clients_per_round} exceeds "
                f"total_clients {self.total_clients}"
            )
        if self.round_time_s is not None and self.epoch_time_s is not None:
            raise ValueError("give round_time_s or epoch_time_s, not both")
        return self


class CentralizedSection(BaseModel):
    model_config = ConfigDict(extra="forbid")

    epoch_time_s: float = Field(gt=0)
    pue: float | None = Field(default=None, ge=1)
    max_epochs: int = Field(default=500, ge=1)


class DatasetSection(BaseModel):
    model_config = ConfigDict(extra="forbid")

    num_classes: int = Field(ge=2)
    input_dim: int = Field(ge=1)
    train_per_class: int = Field(ge=1)
    test_per_class: int = Field(ge=1)
    cluster_std: float = Field(default=1.0, gt=0)
    seed: int = 0


class ModelSection(BaseModel):
    model_config = ConfigDict(extra="forbid")

    hidden_dim: int = Field(default=16, ge=1)


class TrainSection(BaseModel):
    model_config = ConfigDict(extra="forbid")

    learning_rate: float = Field(default=0.05, ge=0)
    momentum: float = Field(default=0.9, ge=0, lt=1)
    batch_size: int = Field(default=32, ge=1)
    seed: int = 0


class LiveSource(BaseModel):
    model_config = ConfigDict(extra="forbid")

    dataset: DatasetSection
    model: ModelSection = ModelSection()
    train: TrainSection = TrainSection()


class SourceSection(BaseModel):
    """Where accuracy comes from: a recorded trace or a live simulation."""

    model_config = ConfigDict(extra="forbid")

    trace: str | None = None
    live: LiveSource | None = None

    @model_validator(mode="after")
    def exactly_one(self) -> SourceSection:
        if (self.trace is None) == (self.live is None):
            raise ValueError("source must set exactly one of 'trace' or 'live'")
        return self


class Scenario(BaseModel):
    """One estimation request: a training mode, its siting and a stop target."""

    model_config = ConfigDict(extra="forbid")

    id: str = Field(min_length=1)
    mode: Literal["FL", "CENTRALIZED"]
    hardware: str = Field(min_length=1)
    region: str = Field(min_length=1)
    target_accuracy: float = Field(ge=0, le=1)
    source: SourceSection
    fl: FlSection | None = None
    centralized: CentralizedSection | None = None
    hardware_overhead: float = Field(default=1.0, gt=0)

    @model_validator(mode="after")
    def check_mode(self) -> Scenario:
        if self.mode == "FL":
            if self.fl is None:
                raise ValueError("mode FL requires an 'fl' section")
            if self.centralized is not None:
                raise ValueError("mode FL forbids a 'centralized' section")
        else:
            if self.centralized is None:
                raise ValueError("mode CENTRALIZED requires a 'centralized' section")
            if self.fl is not None:
                raise ValueError("mode CENTRALIZED forbids an 'fl' section")
            if self.source.live is not None:
                raise ValueError("live accuracy sources only support mode FL")
        return self


def load_scenario(path: str | Path) -> Scenario:
    try:
        with open(path) as handle:
            raw = json.load(handle)
    except json.JSONDecodeError as exc:
        raise DataStoreError(f"{path}: invalid JSON: {exc}") from exc
    try:
        return Scenario.model_validate(raw)
    except Exception as exc:  # pydantic.ValidationError
        raise DataStoreError(f"{path}: {exc}") from exc


def serialize_scenario(scenario: Scenario) -> str:
    return json.dumps(scenario.model_dump(exclude_none=True), indent=2) + "\n"


# ---------------------------------------------------------------------------
# the assembled store


@dataclass(frozen=True)
class Stores:
    """All reference tables needed to resolve and run scenarios."""

    factors: dict[str, EmissionFactor]
    hardware: dict[str, HardwareProfile]
    traces: dict[str, LearningTrace]
    data_dir: Path

    @classmethod
    def load(cls, data_dir: str | Path | None = None) -> Stores:
        root = Path(data_dir) if data_dir is not None else default_data_dir()
        if not root.is_dir():
            raise DataStoreError(f"data directory not found: {root}")
        return cls(
            factors=load_emission_factors(root / EMISSION_FACTORS_FILE),
            hardware=load_hardware_profiles(root / HARDWARE_FILE),
            traces=load_traces(root / TRACES_FILE, root / TRACES_META_FILE),
            data_dir=root,
        )

    def factor(self, region: str) -> EmissionFactor:
        try:
            return self.factors[region]
        except KeyError:
            raise ResolutionError(
                f"unknown region {region!r}; known: {sorted(self.factors)}"
            ) from None

    def profile(self, name: str) -> HardwareProfile:
        try:
            return self.hardware[name]
        except KeyError:
            raise ResolutionError(
                f"unknown hardware {name!r}; known: {sorted(self.hardware)}"
            ) from None

    def trace(self, setup_id: str) -> LearningTrace:
        try:
            return self.traces[setup_id]
        except KeyError:
            raise ResolutionError(f"unknown trace setup {setup_id!r}") from None

    def scenario_path(self, name: str) -> Path:
        return self.data_dir / "scenarios" / f"{name}.json"
