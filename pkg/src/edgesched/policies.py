"""Scheduling policies: the DEMS heuristic ladder and the comparison baselines.

Every policy answers one question per arriving task (edge, cloud or drop)
and declares which edge ordering, cloud admission rule and optional
mechanisms (work stealing, adaptive cloud estimate, QoE rescheduling)
the kernel should wire up for it.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field
from typing import List, Mapping, Optional

from .cloud_queue import CloudAdmission
from .edge_queue import EdgePolicy, InsertAction
from .errors import ConfigError
from .model import Task


class PolicyId(str, enum.Enum):
    CLD = "CLD"
    EO_EDF = "EO_EDF"
    EO_HPF = "EO_HPF"
    EPC_EDF = "EPC_EDF"
    EPC_SJF = "EPC_SJF"
    SOTA1 = "SOTA1"
    SOTA2 = "SOTA2"
    DEM = "DEM"
    DEMS = "DEMS"
    DEMS_A = "DEMS_A"
    GEMS = "GEMS"


_ALIASES = {
    "EDF": PolicyId.EO_EDF, "HPF": PolicyId.EO_HPF, "E+C": PolicyId.EPC_EDF,
    "EDF(E+C)": PolicyId.EPC_EDF, "SJF(E+C)": PolicyId.EPC_SJF, "DEMS-A": PolicyId.DEMS_A,
}


def parse_policy_id(name) -> PolicyId:
    if isinstance(name, PolicyId):
        return name
    key = str(name).strip()
    if key.upper() in _ALIASES:
        return _ALIASES[key.upper()]
    try:
        return PolicyId(key.upper().replace("-", "_"))
    except ValueError:
        choices = ", ".join(p.value for p in PolicyId)
        raise ConfigError("policy.name", f"unknown policy {name!r} (choose from {choices})") from None


class Decision(str, enum.Enum):
    TO_EDGE = "ToEdge"
    TO_CLOUD = "ToCloud"
    DROP = "Drop"


@dataclass
class DispatchResult:
    decision: Decision
    # Queued edge tasks displaced by this arrival; the kernel offers them to the cloud.
    migrated: List[Task] = field(default_factory=list)
    buffered: bool = False


@dataclass
class PolicyParams:
    # SOTA1: tasks with deadline below this are urgent and never get a buffer.
    urgency_threshold: float = 800.0
    deadline_buffer: float = 0.10
    # GEMS: also run the adaptive cloud estimator.
    gems_adaptive: bool = False

    @classmethod
    def from_dict(cls, d: Optional[Mapping], where="policy.params") -> "PolicyParams":
        d = dict(d or {})
        out = cls()
        mapping = {"urgency_threshold_ms": "urgency_threshold",
                   "deadline_buffer": "deadline_buffer", "adaptive": "gems_adaptive"}
        for k, v in d.items():
            if k not in mapping:
                raise ConfigError(f"{where}.{k}", "unknown policy parameter")
            setattr(out, mapping[k], v)
        if out.urgency_threshold < 0:
            raise ConfigError(f"{where}.urgency_threshold_ms", "must be >= 0")
        if not 0 <= out.deadline_buffer <= 10:
            raise ConfigError(f"{where}.deadline_buffer", "must be in [0, 10]")
        return out

    def to_dict(self):
        return {"urgency_threshold_ms": self.urgency_threshold,
                "deadline_buffer": self.deadline_buffer, "adaptive": self.gems_adaptive}


class Policy:
    """Base policy. ``edge_policy`` None means the edge is never used."""

    edge_policy: Optional[EdgePolicy] = EdgePolicy.EDF
    cloud_admission: Optional[CloudAdmission] = CloudAdmission.EC
    stealing = False
    adaptive = False
    qoe_reschedule = False

    def __init__(self, policy_id: PolicyId, params: Optional[PolicyParams] = None):
        self.id = policy_id
        self.params = params or PolicyParams()

    def dispatch(self, task: Task, now: float, edge) -> DispatchResult:
        raise NotImplementedError

    def on_edge_success(self, task: Task, finish_ts: float) -> None:
        pass


class CloudOnly(Policy):
    edge_policy = None
    cloud_admission = CloudAdmission.EC

    def dispatch(self, task, now, edge):
        return DispatchResult(Decision.TO_CLOUD)


class EdgeOnly(Policy):
    cloud_admission = None

    def __init__(self, policy_id, params=None):
        super().__init__(policy_id, params)
        self.edge_policy = EdgePolicy.HPF if policy_id is PolicyId.EO_HPF else EdgePolicy.EDF

    def dispatch(self, task, now, edge):
        # Expired tasks are dropped by the executor's JIT check.
        edge.edge_queue.insert(task)
        return DispatchResult(Decision.TO_EDGE)


class EdgeThenCloud(Policy):
    """E+C: edge if the task fits behind the tasks ahead of it, else immediate cloud."""

    def __init__(self, policy_id, params=None):
        super().__init__(policy_id, params)
        if policy_id is PolicyId.EPC_SJF:
            self.edge_policy = EdgePolicy.SJF
            self.cloud_admission = CloudAdmission.ANY_SIGN

    def dispatch(self, task, now, edge):
        q = edge.edge_queue
        if q.feasibility_check(task, now, edge.busy_until):
            q.insert(task)
            return DispatchResult(Decision.TO_EDGE)
        return DispatchResult(Decision.TO_CLOUD)


class Dems(Policy):
    """DEM, DEMS, DEMS-A and GEMS share the migrate-on-insert edge path."""

    def __init__(self, policy_id, params=None):
        super().__init__(policy_id, params)
        if policy_id is PolicyId.DEM:
            self.cloud_admission = CloudAdmission.EC
        else:
            self.cloud_admission = CloudAdmission.DEFERRED
            self.stealing = True
        self.adaptive = policy_id is PolicyId.DEMS_A or (
            policy_id is PolicyId.GEMS and self.params.gems_adaptive)
        self.qoe_reschedule = policy_id is PolicyId.GEMS

    def dispatch(self, task, now, edge):
        q = edge.edge_queue
        busy = edge.busy_until
        if not q.feasibility_check(task, now, busy):
            return DispatchResult(Decision.TO_CLOUD)
        d = q.insert_with_migration(task, now, busy, lambda t: edge.cloud_feasible(t, now))
        if d.action is InsertAction.REDIRECT_CLOUD:
            return DispatchResult(Decision.TO_CLOUD)
        return DispatchResult(Decision.TO_EDGE, d.migrate_out)


class Sota1(Policy):
    """Urgent / non-urgent split with a one-time deadline buffer for non-urgent tasks.

    The buffer only changes what the scheduler plans against; outcomes are
    judged on the original deadline.
    """

    cloud_admission = CloudAdmission.ANY_SIGN

    def dispatch(self, task, now, edge):
        q = edge.edge_queue
        busy = edge.busy_until
        if q.feasibility_check(task, now, busy):
            q.insert(task)
            return DispatchResult(Decision.TO_EDGE)
        deadline = task.deadline_ts - task.arrival_ts
        if deadline < self.params.urgency_threshold:
            return DispatchResult(Decision.TO_CLOUD)
        task.sched_deadline_ts = task.arrival_ts + deadline * (1.0 + self.params.deadline_buffer)
        if q.feasibility_check(task, now, busy):
            q.insert(task)
            return DispatchResult(Decision.TO_EDGE, buffered=True)
        task.sched_deadline_ts = task.deadline_ts
        return DispatchResult(Decision.TO_CLOUD)


class Sota2(Policy):
    """Shortest-expected-time edge queue arbitrated by average completion time (ACT).

    ACT is the running mean of ``finish - arrival`` over tasks that met
    their deadline on the edge.
    """

    edge_policy = EdgePolicy.EXEC_TIME_ASC
    cloud_admission = CloudAdmission.ANY_SIGN

    def __init__(self, policy_id, params=None):
        super().__init__(policy_id, params)
        self.act_sum = 0.0
        self.act_count = 0

    @property
    def act(self) -> Optional[float]:
        return self.act_sum / self.act_count if self.act_count else None

    def act_update(self, completion_time: float) -> float:
        self.act_sum += completion_time
        self.act_count += 1
        return self.act

    def on_edge_success(self, task, finish_ts):
        self.act_update(finish_ts - task.arrival_ts)

    def _projected_act(self, schedule, excluded=None) -> float:
        total, n = self.act_sum, self.act_count
        for t, finish in schedule:
            if t is not excluded and finish <= t.sched_deadline_ts:
                total += finish - t.arrival_ts
                n += 1
        return total / n if n else 0.0

    def dispatch(self, task, now, edge):
        q = edge.edge_queue
        busy = edge.busy_until
        victims = q.newly_infeasible(task, now, busy)
        own_ok = q.feasibility_check(task, now, busy)
        if own_ok and not victims:
            q.insert(task)
            return DispatchResult(Decision.TO_EDGE)
        if not own_ok or len(victims) > 1 or self.act is None:
            return DispatchResult(Decision.TO_CLOUD)
        victim = victims[0]
        with_task = q.projected_finishes(now, busy, extra=task)
        # Schedule A drops the victim from the edge, which pulls later tasks forward.
        shift = q.duration(victim)
        adjusted, passed = [], False
        for t, finish in with_task:
            if t is victim:
                passed = True
                continue
            adjusted.append((t, finish - shift if passed else finish))
        act_a = self._projected_act(adjusted)
        act_b = self._projected_act(q.projected_finishes(now, busy))
        if act_a < act_b:
            q.remove(victim)
            q.insert(task)
            return DispatchResult(Decision.TO_EDGE, [victim])
        return DispatchResult(Decision.TO_CLOUD)


def make_policy(name, params=None) -> Policy:
    pid = parse_policy_id(name)
    if isinstance(params, Mapping) or params is None:
        params = PolicyParams.from_dict(params)
    cls = {
        PolicyId.CLD: CloudOnly,
        PolicyId.EO_EDF: EdgeOnly, PolicyId.EO_HPF: EdgeOnly,
        PolicyId.EPC_EDF: EdgeThenCloud, PolicyId.EPC_SJF: EdgeThenCloud,
        PolicyId.SOTA1: Sota1, PolicyId.SOTA2: Sota2,
        PolicyId.DEM: Dems, PolicyId.DEMS: Dems, PolicyId.DEMS_A: Dems, PolicyId.GEMS: Dems,
    }[pid]
    return cls(pid, params)
