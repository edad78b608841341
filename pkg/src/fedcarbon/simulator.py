"""Round-by-round simulation with energy and CO2 bookkeeping.

`run_fl` advances one communication round at a time, accumulating wall
time, watt-hours and grams. Accuracy after each round comes either from a
recorded trace (step-wise lookup) or from actually training the bundled
classifier on synthetic client shards. `run_centralized` does the same
per epoch for a single PUE-scaled machine. Both stop at the first
round/epoch whose accuracy reaches the scenario target, or at the
configured cap.

The incremental totals agree with the closed-form products in
`fedcarbon.emissions` to floating-point accuracy; tests pin that identity
at a relative 1e-9.
"""

from __future__ import annotations

import csv
import random
import statistics
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from fedcarbon.emissions import (
    Duration,
    PowerDraw,
    Pue,
    centralized_energy,
    fl_round_energy,
)
from fedcarbon.partition import (
    ClientShard,
    LabeledDatasetSpec,
    partition_iid,
    partition_non_iid,
)
from fedcarbon.stores import (
    DataStoreError,
    HardwareProfile,
    LearningTrace,
    Scenario,
    Stores,
)
from fedcarbon.training import (
    ModelParams,
    TrainConfig,
    evaluate_accuracy,
    fedavg_aggregate,
    init_params,
    local_train,
    make_synthetic_classification,
)

RUN_CSV_HEADER = [
    "scenario_id",
    "round",
    "selected",
    "accuracy",
    "cum_seconds",
    "cum_wh",
    "cum_co2_g",
]


@dataclass(frozen=True)
class RoundLog:
    """State after one communication round (or one centralized epoch)."""

    round_index: int
    selected_client_ids: tuple[int, ...]
    accuracy: float
    cumulative_seconds: float
    cumulative_watt_hours: float
    cumulative_co2_grams: float


@dataclass(frozen=True)
class RunResult:
    """Outcome of a full simulated run."""

    scenario_id: str
    mode: str
    reached: bool
    rounds_to_target: int | None
    total_seconds: float
    total_watt_hours: float
    total_co2_grams: float
    max_accuracy: float
    logs: tuple[RoundLog, ...]

    def __post_init__(self) -> None:
        if self.reached != (self.rounds_to_target is not None):
            raise ValueError("reached must hold exactly when rounds_to_target is set")


@dataclass(frozen=True)
class Comparison:
    """A federated and a centralized run over the same task, side by side."""

    fl: RunResult
    centralized: RunResult
    co2_ratio: float | None
    wall_time_ratio: float | None


def select_clients(
    total_clients: int, clients_per_round: int, seed: int, round_index: int
) -> tuple[int, ...]:
    """Uniformly sample this round's participants, without replacement.

    The draw is a pure function of (seed, round_index), so re-running a
    scenario replays the exact same participation schedule.
    """
    if clients_per_round > total_clients:
        raise ValueError(
            f"cannot select {clients_per_round} of {total_clients} clients"
        )
    rng = random.Random(f"{seed}:{round_index}")
    return tuple(sorted(rng.sample(range(total_clients), clients_per_round)))


def derive_seed(base_seed: int, round_index: int, client_id: int) -> int:
    """Stable per-(round, client) training seed derived from the run seed."""
    mixed = (base_seed & 0xFFFFFFFF) * 1_000_003 + round_index
    return mixed * 1_000_003 + client_id


def _resolve_power(profile: HardwareProfile, overhead: float) -> PowerDraw:
    return PowerDraw(profile.power.watts * overhead)


def _fl_round_time_seconds(scenario: Scenario, trace: LearningTrace | None) -> float:
    fl = scenario.fl
    assert fl is not None
    if fl.round_time_s is not None:
        return fl.round_time_s
    if fl.epoch_time_s is not None:
        return fl.epoch_time_s * fl.local_epochs
    if trace is not None:
        return trace.round_time.seconds
    raise DataStoreError(
        f"{scenario.id}: live scenarios need fl.round_time_s or fl.epoch_time_s"
    )


class _TraceAccuracy:
    """Accuracy per round read from a recorded trace."""

    def __init__(self, trace: LearningTrace):
        self._trace = trace

    def initial(self) -> float:
        return 0.0

    def after_round(self, round_index: int) -> float:
        return self._trace.accuracy_at(round_index)


class _LiveAccuracy:
    """Accuracy per round produced by actually running FedAVG."""

    def __init__(self, scenario: Scenario):
        fl = scenario.fl
        live = scenario.source.live
        assert fl is not None and live is not None
        data_cfg = live.dataset
        self._data = make_synthetic_classification(
            num_classes=data_cfg.num_classes,
            input_dim=data_cfg.input_dim,
            train_per_class=data_cfg.train_per_class,
            test_per_class=data_cfg.test_per_class,
            cluster_std=data_cfg.cluster_std,
            seed=data_cfg.seed,
        )
        spec = LabeledDatasetSpec.from_labels(
            self._data.train_labels, data_cfg.num_classes
        )
        if fl.partitioning == "IID":
            shards = partition_iid(spec, fl.total_clients, seed=live.train.seed)
        else:
            shards = partition_non_iid(spec, fl.total_clients, seed=live.train.seed)
        self._shards: dict[int, ClientShard] = {s.client_id: s for s in shards}
        self._params = init_params(
            data_cfg.input_dim,
            live.model.hidden_dim,
            data_cfg.num_classes,
            seed=live.train.seed,
        )
        self._train = live.train
        self._local_epochs = fl.local_epochs

    def initial(self) -> float:
        return evaluate_accuracy(
            self._params, self._data.test_features, self._data.test_labels
        )

    def run_round(self, round_index: int, selected: tuple[int, ...]) -> float:
        updates: list[tuple[ModelParams, int]] = []
        for client_id in selected:
            shard = self._shards[client_id]
            if shard.size == 0:
                continue
            indices = np.asarray(shard.sample_indices)
            config = TrainConfig(
                learning_rate=self._train.learning_rate,
                momentum=self._train.momentum,
                batch_size=self._train.batch_size,
                local_epochs=self._local_epochs,
                seed=derive_seed(self._train.seed, round_index, client_id),
            )
            trained, _ = local_train(
                self._params,
                self._data.train_features[indices],
                self._data.train_labels[indices],
                config,
            )
            updates.append((trained, shard.size))
        if updates:
            self._params = fedavg_aggregate(updates)
        return evaluate_accuracy(
            self._params, self._data.test_features, self._data.test_labels
        )


def run_fl(scenario: Scenario, stores: Stores) -> RunResult:
    """Simulate a federated scenario to its target or its round cap."""
    if scenario.mode != "FL":
        raise DataStoreError(f"{scenario.id}: run_fl needs mode FL")
    fl = scenario.fl
    assert fl is not None
    profile = stores.profile(scenario.hardware)
    factor = stores.factor(scenario.region)
    power = _resolve_power(profile, scenario.hardware_overhead)

    trace = stores.trace(scenario.source.trace) if scenario.source.trace else None
    round_seconds = _fl_round_time_seconds(scenario, trace)
    per_round_wh = fl_round_energy(
        fl.clients_per_round, Duration(round_seconds), power
    ).watt_hours

    live = _LiveAccuracy(scenario) if scenario.source.live is not None else None
    accuracy = live.initial() if live is not None else 0.0
    if accuracy >= scenario.target_accuracy:
        return RunResult(
            scenario_id=scenario.id,
            mode="FL",
            reached=True,
            rounds_to_target=0,
            total_seconds=0.0,
            total_watt_hours=0.0,
            total_co2_grams=0.0,
            max_accuracy=accuracy,
            logs=(),
        )

    logs: list[RoundLog] = []
    seconds = 0.0
    watt_hours = 0.0
    best = accuracy
    reached_at: int | None = None
    for round_index in range(1, fl.max_rounds + 1):
        selected = select_clients(
            fl.total_clients, fl.clients_per_round, fl.selection_seed, round_index
        )
        if live is not None:
            accuracy = live.run_round(round_index, selected)
        else:
            assert trace is not None
            accuracy = trace.accuracy_at(round_index)
        seconds += round_seconds
        watt_hours += per_round_wh
        best = max(best, accuracy)
        logs.append(
            RoundLog(
                round_index=round_index,
                selected_client_ids=selected,
                accuracy=accuracy,
                cumulative_seconds=seconds,
                cumulative_watt_hours=watt_hours,
                cumulative_co2_grams=factor.kg_co2_per_kwh * watt_hours,
            )
        )
        if accuracy >= scenario.target_accuracy:
            reached_at = round_index
            break

    last = logs[-1]
    return RunResult(
        scenario_id=scenario.id,
        mode="FL",
        reached=reached_at is not None,
        rounds_to_target=reached_at,
        total_seconds=last.cumulative_seconds,
        total_watt_hours=last.cumulative_watt_hours,
        total_co2_grams=last.cumulative_co2_grams,
        max_accuracy=best,
        logs=tuple(logs),
    )


def run_centralized(scenario: Scenario, stores: Stores) -> RunResult:
    """Simulate a centralized scenario epoch by epoch."""
    if scenario.mode != "CENTRALIZED":
        raise DataStoreError(f"{scenario.id}: run_centralized needs mode CENTRALIZED")
    section = scenario.centralized
    assert section is not None
    profile = stores.profile(scenario.hardware)
    factor = stores.factor(scenario.region)
    power = _resolve_power(profile, scenario.hardware_overhead)
    if section.pue is not None:
        pue = Pue(section.pue)
    elif profile.pue is not None:
        pue = profile.pue
    else:
        raise DataStoreError(
            f"{scenario.id}: centralized runs need a PUE on the scenario or hardware"
        )
    assert scenario.source.trace is not None
    trace = stores.trace(scenario.source.trace)
    per_epoch_wh = centralized_energy(
        pue, Duration(section.epoch_time_s), power
    ).watt_hours

    if scenario.target_accuracy <= 0.0:
        return RunResult(
            scenario_id=scenario.id,
            mode="CENTRALIZED",
            reached=True,
            rounds_to_target=0,
            total_seconds=0.0,
            total_watt_hours=0.0,
            total_co2_grams=0.0,
            max_accuracy=0.0,
            logs=(),
        )

    logs: list[RoundLog] = []
    seconds = 0.0
    watt_hours = 0.0
    best = 0.0
    reached_at: int | None = None
    for epoch in range(1, section.max_epochs + 1):
        accuracy = trace.accuracy_at(epoch)
        seconds += section.epoch_time_s
        watt_hours += per_epoch_wh
        best = max(best, accuracy)
        logs.append(
            RoundLog(
                round_index=epoch,
                selected_client_ids=(),
                accuracy=accuracy,
                cumulative_seconds=seconds,
                cumulative_watt_hours=watt_hours,
                cumulative_co2_grams=factor.kg_co2_per_kwh * watt_hours,
            )
        )
        if accuracy >= scenario.target_accuracy:
            reached_at = epoch
            break

    last = logs[-1]
    return RunResult(
        scenario_id=scenario.id,
        mode="CENTRALIZED",
        reached=reached_at is not None,
        rounds_to_target=reached_at,
        total_seconds=last.cumulative_seconds,
        total_watt_hours=last.cumulative_watt_hours,
        total_co2_grams=last.cumulative_co2_grams,
        max_accuracy=best,
        logs=tuple(logs),
    )


def run_scenario(scenario: Scenario, stores: Stores) -> RunResult:
    return run_fl(scenario, stores) if scenario.mode == "FL" else run_centralized(scenario, stores)


@dataclass(frozen=True)
class SeedStudy:
    """Rounds-to-target statistics for one partitioning across seeds."""

    partitioning: str
    seeds: int
    reached: int
    rounds: tuple[int, ...]

    @property
    def mean_rounds(self) -> float | None:
        return statistics.fmean(self.rounds) if self.rounds else None

    @property
    def stddev_rounds(self) -> float | None:
        return statistics.pstdev(self.rounds) if self.rounds else None


def live_seed_study(
    scenario: Scenario, stores: Stores, seed_count: int
) -> tuple[SeedStudy, SeedStudy]:
    """Rerun a live scenario over consecutive seeds under both shard skews.

    Run k uses train and selection seed `train.seed + k`; the dataset seed
    stays fixed so only shard identities, init and shuffling vary.
    """
    if seed_count < 1:
        raise ValueError(f"seed_count must be >= 1, got {seed_count}")
    if scenario.mode != "FL" or scenario.source.live is None:
        raise DataStoreError(f"{scenario.id}: seed studies need a live FL scenario")
    base_seed = scenario.source.live.train.seed
    studies = []
    for partitioning in ("IID", "NON_IID"):
        rounds: list[int] = []
        reached = 0
        for offset in range(seed_count):
            seed = base_seed + offset
            raw = scenario.model_dump(exclude_none=True)
            raw["fl"]["partitioning"] = partitioning
            raw["fl"]["selection_seed"] = seed
            raw["source"]["live"]["train"]["seed"] = seed
            result = run_fl(Scenario.model_validate(raw), stores)
            if result.reached:
                reached += 1
                rounds.append(result.rounds_to_target)
        studies.append(
            SeedStudy(
                partitioning=partitioning,
                seeds=seed_count,
                reached=reached,
                rounds=tuple(rounds),
            )
        )
    return studies[0], studies[1]


def compare_runs(fl_result: RunResult, centralized_result: RunResult) -> Comparison:
    """Put a federated and a centralized result side by side with ratios."""

    def ratio(a: float, b: float) -> float | None:
        if b == 0.0:
            return None
        return a / b

    return Comparison(
        fl=fl_result,
        centralized=centralized_result,
        co2_ratio=ratio(fl_result.total_co2_grams, centralized_result.total_co2_grams),
        wall_time_ratio=ratio(fl_result.total_seconds, centralized_result.total_seconds),
    )


def write_run_csv(result: RunResult, path: str | Path) -> None:
    """Per-round log as CSV; selected ids are semicolon-joined in one cell."""
    with open(path, "w", newline="") as handle:
        writer = csv.writer(handle)
        writer.writerow(RUN_CSV_HEADER)
        for log in result.logs:
            writer.writerow(
                [
                    result.scenario_id,
                    log.round_index,
                    ";".join(str(c) for c in log.selected_client_ids),
                    repr(log.accuracy),
                    repr(log.cumulative_seconds),
                    repr(log.cumulative_watt_hours),
                    repr(log.cumulative_co2_grams),
                ]
            )


def read_run_csv(path: str | Path) -> list[dict[str, str]]:
    with open(path, newline="") as handle:
        reader = csv.DictReader(handle)
        if reader.fieldnames != RUN_CSV_HEADER:
            raise DataStoreError(f"{path}: expected header {','.join(RUN_CSV_HEADER)}")
        return [row for row in reader if row.get("scenario_id")]
