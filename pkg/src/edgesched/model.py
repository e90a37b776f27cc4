"""Domain types and the utility / scoring formulas shared by every policy.

All durations and timestamps are milliseconds. Utilities are integers.
"""

from __future__ import annotations

import enum
import json
from dataclasses import dataclass
from pathlib import Path
from typing import Dict, Mapping, Optional

from .errors import ConfigError


class Disposition(str, enum.Enum):
    EDGE_ON_TIME = "EdgeOnTime"
    EDGE_MISSED = "EdgeMissed"
    CLOUD_ON_TIME = "CloudOnTime"
    CLOUD_MISSED = "CloudMissed"
    DROPPED = "Dropped"

    @property
    def on_edge(self) -> bool:
        return self in (Disposition.EDGE_ON_TIME, Disposition.EDGE_MISSED)

    @property
    def on_cloud(self) -> bool:
        return self in (Disposition.CLOUD_ON_TIME, Disposition.CLOUD_MISSED)

    @property
    def on_time(self) -> bool:
        return self in (Disposition.EDGE_ON_TIME, Disposition.CLOUD_ON_TIME)


@dataclass(frozen=True)
class ModelProfile:
    """Static parameters of one DNN model.

    ``edge_cost`` and ``cloud_cost`` are the total normalized cost of one
    execution (expected duration times unit cost, already multiplied).
    """

    model_id: str
    benefit: int
    deadline: float
    edge_duration_expected: float
    cloud_duration_expected_static: float
    edge_cost: int
    cloud_cost: int
    qoe_rate: Optional[float] = None
    qoe_window: float = 20_000.0
    qoe_bonus: int = 0

    def __post_init__(self):
        where = f"profiles.{self.model_id}"
        if self.deadline <= 0:
            raise ConfigError(f"{where}.deadline_ms", "must be > 0")
        if self.edge_duration_expected <= 0:
            raise ConfigError(f"{where}.edge_ms", "must be > 0")
        if self.cloud_duration_expected_static <= 0:
            raise ConfigError(f"{where}.cloud_ms", "must be > 0")
        if self.edge_cost < 0:
            raise ConfigError(f"{where}.edge_cost", "must be >= 0")
        if self.cloud_cost < 0:
            raise ConfigError(f"{where}.cloud_cost", "must be >= 0")
        if self.qoe_rate is not None:
            if not 0 < self.qoe_rate <= 1:
                raise ConfigError(f"{where}.qoe_rate", "must satisfy 0 < rate <= 1")
            if self.qoe_window <= 0:
                raise ConfigError(f"{where}.qoe_window_ms", "must be > 0")

    @property
    def edge_utility(self) -> int:
        """Utility of an on-time edge execution."""
        return self.benefit - self.edge_cost

    @property
    def cloud_utility(self) -> int:
        """Utility of an on-time cloud execution."""
        return self.benefit - self.cloud_cost

    @property
    def qoe_enabled(self) -> bool:
        return self.qoe_rate is not None


class Task:
    """One inference request: a model applied to one video segment.

    ``deadline_ts`` is the absolute deadline and is never changed.
    ``sched_deadline_ts`` is what schedulers plan against; only the SOTA1
    baseline ever moves it away from ``deadline_ts``.
    """

    __slots__ = (
        "task_id", "model_id", "arrival_ts", "deadline_ts", "sched_deadline_ts",
        "payload_bytes", "drone_id", "edge_id", "index", "state",
    )

    def __init__(self, task_id, model_id, arrival_ts, deadline, payload_bytes=38_000,
                 drone_id=0, edge_id=0, index=None):
        self.task_id = task_id
        self.model_id = model_id
        self.arrival_ts = float(arrival_ts)
        self.deadline_ts = self.arrival_ts + deadline
        self.sched_deadline_ts = self.deadline_ts
        self.payload_bytes = payload_bytes
        self.drone_id = drone_id
        self.edge_id = edge_id
        self.index = task_id if index is None else index
        self.state = "created"

    def __repr__(self):
        return (f"Task({self.task_id!r}, {self.model_id}, arrival={self.arrival_ts:g}, "
                f"deadline={self.deadline_ts:g}, state={self.state})")


@dataclass
class TaskOutcome:
    task_id: int
    model_id: str
    disposition: Disposition
    qos_utility: int
    arrival_ts: float
    deadline_ts: float
    finalized_ts: float
    start_ts: Optional[float] = None
    finish_ts: Optional[float] = None
    actual_duration: Optional[float] = None
    stolen: bool = False
    gems_rescheduled: bool = False
    migrated: bool = False
    drone_id: int = 0
    edge_id: int = 0


@dataclass
class WindowState:
    model_id: str
    window_start: float
    window_end: float
    total_count: int = 0
    success_count: int = 0
    accrued_qoe: int = 0

    @property
    def incremental_rate(self) -> float:
        # An empty-so-far window reports 0 rather than NaN.
        if self.total_count == 0:
            return 0.0
        return self.success_count / self.total_count


def qos_utility(profile: ModelProfile, disposition: Disposition) -> int:
    if disposition is Disposition.EDGE_ON_TIME:
        return profile.benefit - profile.edge_cost
    if disposition is Disposition.EDGE_MISSED:
        return -profile.edge_cost
    if disposition is Disposition.CLOUD_ON_TIME:
        return profile.benefit - profile.cloud_cost
    if disposition is Disposition.CLOUD_MISSED:
        return -profile.cloud_cost
    if disposition is Disposition.DROPPED:
        return 0
    raise ValueError(f"unknown disposition {disposition!r}")


def qoe_window_utility(window: WindowState, profile: ModelProfile) -> int:
    """Bonus for a closed window: paid iff the on-time fraction reaches the target rate."""
    if not profile.qoe_enabled or window.total_count == 0:
        return 0
    if window.success_count / window.total_count >= profile.qoe_rate:
        return profile.qoe_bonus
    return 0


def migration_score(profile: ModelProfile, cloud_feasible: bool) -> int:
    """Score of a task when deciding whether to migrate it off the edge.

    When the cloud is a profitable fallback the score is only the utility
    lost by moving; otherwise the whole edge utility is at stake.
    """
    gamma_cloud = profile.cloud_utility
    if cloud_feasible and gamma_cloud > 0:
        return profile.edge_utility - gamma_cloud
    return profile.edge_utility


def steal_rank(profile: ModelProfile) -> float:
    """Edge-over-cloud utility gain per millisecond of edge time."""
    return (profile.edge_utility - profile.cloud_utility) / profile.edge_duration_expected


def steal_order_key(profile: ModelProfile):
    """Sort key for steal candidates: negative cloud utility first, then rank descending."""
    return (0 if profile.cloud_utility < 0 else 1, -steal_rank(profile))


ProfileTable = Dict[str, ModelProfile]


def get_profile(profiles: Mapping[str, ModelProfile], model_id: str) -> ModelProfile:
    try:
        return profiles[model_id]
    except KeyError:
        raise ConfigError(f"profiles.{model_id}", "unknown model id") from None


# model: (benefit, deadline, edge_ms, cloud_ms, edge_cost, cloud_cost)
# MD's cloud cost is set so that its on-time cloud utility is 50.
TABLE1 = {
    "HV": (125, 650, 174, 398, 1, 25),
    "DEV": (100, 750, 172, 429, 1, 26),
    "MD": (75, 850, 142, 589, 1, 25),
    "BP": (40, 900, 244, 542, 2, 43),
    "CD": (175, 1000, 563, 878, 4, 152),
    "DEO": (250, 950, 739, 832, 6, 210),
}

# model: (qoe_bonus, deadline, edge_ms, cloud_ms)
TABLE2_WL1 = {
    "HV": (360, 400, 100, 200),
    "DEV": (420, 600, 300, 400),
    "MD": (480, 1000, 200, 300),
    "CD": (600, 800, 650, 750),
}
TABLE2_WL2 = {
    "HV": (360, 400, 100, 200),
    "DEV": (420, 600, 300, 400),
    "MD": (480, 800, 200, 300),
    "CD": (600, 1000, 750, 950),
}

PASSIVE_MODELS = ("HV", "DEV", "MD", "BP")
ACTIVE_MODELS = ("HV", "DEV", "MD", "BP", "CD", "DEO")
GEMS_MODELS = ("HV", "DEV", "MD", "CD")


def table1_profiles() -> ProfileTable:
    return {
        m: ModelProfile(m, b, d, t, tc, k, kc)
        for m, (b, d, t, tc, k, kc) in TABLE1.items()
    }


def gems_profiles(workload: str = "WL1", qoe_rate: float = 0.9,
                  qoe_window: float = 20_000.0) -> ProfileTable:
    """Four-model QoE workloads. Benefits and costs carry over from the six-model table."""
    rows = {"WL1": TABLE2_WL1, "WL2": TABLE2_WL2}.get(workload.upper())
    if rows is None:
        raise ConfigError("profiles", f"unknown QoE workload {workload!r}")
    out = {}
    for m, (bonus, d, t, tc) in rows.items():
        b, _, _, _, k, kc = TABLE1[m]
        out[m] = ModelProfile(m, b, d, t, tc, k, kc, qoe_rate=qoe_rate,
                              qoe_window=qoe_window, qoe_bonus=bonus)
    return out


_PROFILE_KEYS = {"benefit", "deadline_ms", "edge_ms", "cloud_ms", "edge_cost",
                 "cloud_cost", "qoe_rate", "qoe_window_ms", "qoe_bonus"}
_REQUIRED_KEYS = ("benefit", "deadline_ms", "edge_ms", "cloud_ms", "edge_cost", "cloud_cost")


def profiles_from_dict(doc: Mapping, where: str = "profiles") -> ProfileTable:
    """Build a profile table from ``{model_id: {benefit: .., deadline_ms: .., ...}}``."""
    if not isinstance(doc, Mapping) or not doc:
        raise ConfigError(where, "expected a non-empty object of model profiles")
    out = {}
    for model_id, row in doc.items():
        path = f"{where}.{model_id}"
        if not isinstance(row, Mapping):
            raise ConfigError(path, "expected an object")
        unknown = set(row) - _PROFILE_KEYS
        if unknown:
            raise ConfigError(f"{path}.{sorted(unknown)[0]}", "unknown key")
        for key in _REQUIRED_KEYS:
            if key not in row:
                raise ConfigError(f"{path}.{key}", "missing")
        for key in ("benefit", "edge_cost", "cloud_cost", "qoe_bonus"):
            if key in row and (not isinstance(row[key], int) or isinstance(row[key], bool)):
                raise ConfigError(f"{path}.{key}", "must be an integer")
        out[str(model_id)] = ModelProfile(
            model_id=str(model_id),
            benefit=row["benefit"],
            deadline=float(row["deadline_ms"]),
            edge_duration_expected=float(row["edge_ms"]),
            cloud_duration_expected_static=float(row["cloud_ms"]),
            edge_cost=row["edge_cost"],
            cloud_cost=row["cloud_cost"],
            qoe_rate=row.get("qoe_rate"),
            qoe_window=float(row.get("qoe_window_ms", 20_000)),
            qoe_bonus=row.get("qoe_bonus", 0),
        )
    return out


def profiles_to_dict(profiles: Mapping[str, ModelProfile]) -> dict:
    out = {}
    for m, p in profiles.items():
        row = {
            "benefit": p.benefit,
            "deadline_ms": p.deadline,
            "edge_ms": p.edge_duration_expected,
            "cloud_ms": p.cloud_duration_expected_static,
            "edge_cost": p.edge_cost,
            "cloud_cost": p.cloud_cost,
        }
        if p.qoe_enabled:
            row.update(qoe_rate=p.qoe_rate, qoe_window_ms=p.qoe_window, qoe_bonus=p.qoe_bonus)
        out[m] = row
    return out


def load_profiles(path) -> ProfileTable:
    with open(Path(path), encoding="utf-8") as f:
        return profiles_from_dict(json.load(f))
