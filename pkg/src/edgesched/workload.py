"""Seeded task streams: m drones sending one segment per interval to one edge."""

from __future__ import annotations

import csv
import random
from dataclasses import dataclass
from pathlib import Path
from typing import List, Mapping, Sequence, Tuple, Union

from .errors import ConfigError
from .model import ACTIVE_MODELS, GEMS_MODELS, PASSIVE_MODELS, ModelProfile, Task

MODEL_SETS = {
    "passive": PASSIVE_MODELS,
    "active": ACTIVE_MODELS,
    "wl1": GEMS_MODELS,
    "wl2": GEMS_MODELS,
}


@dataclass
class WorkloadSpec:
    drones: int = 2
    model_set: Union[str, Sequence[str]] = "passive"
    segment_interval: float = 1000.0
    duration: float = 300_000.0
    payload_bytes: int = 38_000
    seed: int = 0

    def __post_init__(self):
        if not isinstance(self.drones, int) or self.drones < 1:
            raise ConfigError("workload.drones", "must be a positive integer")
        if self.segment_interval <= 0:
            raise ConfigError("workload.segment_interval_ms", "must be > 0")
        if self.duration <= 0:
            raise ConfigError("workload.duration_ms", "must be > 0")
        if self.payload_bytes < 0:
            raise ConfigError("workload.payload_bytes", "must be >= 0")
        if isinstance(self.model_set, str) and self.model_set.lower() not in MODEL_SETS:
            raise ConfigError("workload.model_set", f"unknown model set {self.model_set!r}")
        if not isinstance(self.model_set, str) and not self.model_set:
            raise ConfigError("workload.model_set", "custom model set is empty")

    @property
    def models(self) -> Tuple[str, ...]:
        if isinstance(self.model_set, str):
            return MODEL_SETS[self.model_set.lower()]
        return tuple(self.model_set)

    @property
    def segments_per_drone(self) -> int:
        return int(self.duration // self.segment_interval)

    @property
    def expected_count(self) -> int:
        return self.drones * self.segments_per_drone * len(self.models)

    @property
    def label(self) -> str:
        if isinstance(self.model_set, str):
            name = self.model_set.lower()
            if name in ("passive", "active"):
                return f"{self.drones}D-{name[0].upper()}"
            return name.upper()
        return f"{self.drones}D-" + "+".join(self.model_set)


def generate(spec: WorkloadSpec, profiles: Mapping[str, ModelProfile],
             edge_id: int = 0) -> List[Task]:
    """All tasks for one edge, ordered by arrival.

    Every segment tick emits one task per (drone, model); the tasks of a
    tick share an arrival time and are interleaved by a seeded shuffle.
    """
    models = spec.models
    for m in models:
        if m not in profiles:
            raise ConfigError("workload.model_set", f"unknown model {m!r}")
    rng = random.Random(spec.seed * 1_000_003 + edge_id)
    deadlines = {m: profiles[m].deadline for m in models}
    tasks = []
    idx = 0
    pairs = [(d, m) for d in range(spec.drones) for m in models]
    for tick in range(spec.segments_per_drone):
        ts = tick * spec.segment_interval
        order = pairs[:]
        rng.shuffle(order)
        for drone, m in order:
            tasks.append(Task(idx, m, ts, deadlines[m], spec.payload_bytes, drone, edge_id))
            idx += 1
    return tasks


def export_csv(tasks: Sequence[Task], path) -> None:
    with open(Path(path), "w", newline="", encoding="utf-8") as f:
        w = csv.writer(f, lineterminator="\n")
        w.writerow(["task_id", "model_id", "arrival_ms", "drone_id"])
        for t in tasks:
            w.writerow([t.task_id, t.model_id, f"{t.arrival_ts:g}", t.drone_id])
