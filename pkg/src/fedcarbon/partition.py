"""Client data partitioning for federated simulations.

Two strategies are provided. `partition_iid` splits every class evenly
across all clients, so each shard mirrors the global label distribution.
`partition_non_iid` gives every client a thin IID base layer (half of each
class) and concentrates the remaining half of each class on half of the
clients, producing the label skew that slows federated convergence.

Shard sizes are a deterministic function of the dataset shape; the seed
only decides which concrete sample indices land where.
"""

from __future__ import annotations

import csv
import warnings
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np


@dataclass(frozen=True)
class LabeledDatasetSpec:
    """Index-level view of a labeled dataset: which sample ids belong to which class."""

    num_classes: int
    class_indices: tuple[tuple[int, ...], ...]

    def __post_init__(self) -> None:
        if self.num_classes < 1:
            raise ValueError(f"num_classes must be >= 1, got {self.num_classes}")
        if len(self.class_indices) != self.num_classes:
            raise ValueError(
                f"class_indices has {len(self.class_indices)} groups for "
                f"{self.num_classes} classes"
            )
        seen: set[int] = set()
        for group in self.class_indices:
            for idx in group:
                if idx < 0:
                    raise ValueError(f"sample indices must be >= 0, got {idx}")
                if idx in seen:
                    raise ValueError(f"sample index {idx} appears in more than one class")
                seen.add(idx)

    @property
    def samples_per_class(self) -> list[int]:
        return [len(group) for group in self.class_indices]

    @property
    def total_samples(self) -> int:
        return sum(self.samples_per_class)

    @classmethod
    def from_labels(cls, labels: np.ndarray, num_classes: int) -> LabeledDatasetSpec:
        """Group ascending sample indices by their label value."""
        labels = np.asarray(labels)
        if labels.ndim != 1:
            raise ValueError(f"labels must be 1-D, got shape {labels.shape}")
        if labels.size and (labels.min() < 0 or labels.max() >= num_classes):
            raise ValueError("labels out of range for num_classes")
        groups = tuple(
            tuple(int(i) for i in np.flatnonzero(labels == c)) for c in range(num_classes)
        )
        return cls(num_classes=num_classes, class_indices=groups)


@dataclass
class ClientShard:
    """One client's slice of the dataset."""

    client_id: int
    sample_indices: list[int]
    class_histogram: list[int]
    uneven_split: bool = field(default=False)

    @property
    def size(self) -> int:
        return len(self.sample_indices)


def _chunk_sizes(count: int, parts: int) -> list[int]:
    # remainder goes round-robin to the lowest client ids, so sizes differ by at most 1
    base, rem = divmod(count, parts)
    return [base + (1 if i < rem else 0) for i in range(parts)]


def _deal(
    shards: list[ClientShard],
    recipients: list[int],
    class_id: int,
    pool: list[int],
) -> bool:
    """Deal `pool` across `recipients` evenly; returns True when the split is uneven."""
    sizes = _chunk_sizes(len(pool), len(recipients))
    cursor = 0
    for recipient, size in zip(recipients, sizes):
        shard = shards[recipient]
        shard.sample_indices.extend(pool[cursor : cursor + size])
        shard.class_histogram[class_id] += size
        cursor += size
    return len(pool) % len(recipients) != 0


def _finalize(shards: list[ClientShard], uneven: bool) -> list[ClientShard]:
    for shard in shards:
        shard.sample_indices.sort()
        shard.uneven_split = uneven
    if uneven:
        warnings.warn(
            "dataset does not divide evenly across clients; shard sizes differ by 1 "
            "within affected classes",
            UserWarning,
            stacklevel=3,
        )
    return shards


def partition_iid(
    spec: LabeledDatasetSpec, total_clients: int, seed: int
) -> list[ClientShard]:
    """Split every class evenly across all clients.

    Remainders are handed out round-robin by ascending client id, so any two
    shards differ by at most 1 sample per class and at most num_classes in
    total. An uneven split is flagged on the shards and raises a UserWarning.
    """
    if total_clients < 1:
        raise ValueError(f"total_clients must be >= 1, got {total_clients}")
    rng = np.random.default_rng(seed)
    shards = [
        ClientShard(cid, [], [0] * spec.num_classes) for cid in range(total_clients)
    ]
    everyone = list(range(total_clients))
    uneven = False
    for class_id, group in enumerate(spec.class_indices):
        pool = [int(i) for i in rng.permutation(np.asarray(group, dtype=np.int64))]
        uneven |= _deal(shards, everyone, class_id, pool)
    return _finalize(shards, uneven)


def partition_non_iid(
    spec: LabeledDatasetSpec, total_clients: int, seed: int
) -> list[ClientShard]:
    """Split with label skew: half of each class IID, the other half concentrated.

    Phase 1 deals the first half of every class evenly across all clients.
    Phase 2 deals the remaining half of the low classes [0, C/2) to the low
    client half [0, T/2) and the remaining half of the high classes to the
    high client half. Requires an even class count and an even client count.
    """
    if total_clients < 2 or total_clients % 2 != 0:
        raise ValueError(f"total_clients must be even and >= 2, got {total_clients}")
    if spec.num_classes < 2 or spec.num_classes % 2 != 0:
        raise ValueError(f"num_classes must be even and >= 2, got {spec.num_classes}")
    rng = np.random.default_rng(seed)
    shards = [
        ClientShard(cid, [], [0] * spec.num_classes) for cid in range(total_clients)
    ]
    everyone = list(range(total_clients))
    low_half = everyone[: total_clients // 2]
    high_half = everyone[total_clients // 2 :]
    uneven = False
    for class_id, group in enumerate(spec.class_indices):
        pool = [int(i) for i in rng.permutation(np.asarray(group, dtype=np.int64))]
        half = len(pool) // 2
        uneven |= _deal(shards, everyone, class_id, pool[:half])
        majority = low_half if class_id < spec.num_classes // 2 else high_half
        uneven |= _deal(shards, majority, class_id, pool[half:])
        uneven |= len(pool) % 2 != 0
    return _finalize(shards, uneven)


def write_shard_histogram_csv(shards: list[ClientShard], path: str | Path) -> None:
    """Dump per-client class counts as rows of client_id,class,count."""
    with open(path, "w", newline="") as handle:
        writer = csv.writer(handle)
        writer.writerow(["client_id", "class", "count"])
        for shard in shards:
            for class_id, count in enumerate(shard.class_histogram):
                writer.writerow([shard.client_id, class_id, count])
