"""Edge task priority queue with feasibility scanning and migration on insert."""

from __future__ import annotations

import enum
from bisect import bisect_right
from dataclasses import dataclass, field
from typing import Callable, Iterator, List, Mapping, Optional

from .model import ModelProfile, Task, migration_score


class EdgePolicy(str, enum.Enum):
    EDF = "EDF"
    SJF = "SJF"
    HPF = "HPF"
    # SOTA2: shortest expected edge time first (same key as SJF, kept distinct for reports)
    EXEC_TIME_ASC = "ExecTimeAsc"


class InsertAction(str, enum.Enum):
    INSERT_EDGE = "InsertEdge"
    REDIRECT_CLOUD = "RedirectCloud"
    INSERT_EDGE_AND_MIGRATE = "InsertEdgeAndMigrate"


@dataclass
class InsertionDecision:
    action: InsertAction
    migrate_out: List[Task] = field(default_factory=list)
    candidate_score: int = 0
    displaced_score: int = 0


class EdgeQueue:
    """Entries are kept sorted by ``(priority_key, insertion_seq)``.

    The sequence number gives FIFO order among equal keys. Expected edge
    durations are read from the profile table; they never adapt.
    """

    def __init__(self, profiles: Mapping[str, ModelProfile], policy=EdgePolicy.EDF):
        self.profiles = profiles
        self.policy = EdgePolicy(policy)
        self._entries: list = []  # (key, seq, task)
        self._seq = 0
        self._dur = {m: p.edge_duration_expected for m, p in profiles.items()}
        if self.policy is EdgePolicy.HPF:
            self._static_key = {m: -p.edge_utility / p.edge_duration_expected
                                for m, p in profiles.items()}
        elif self.policy in (EdgePolicy.SJF, EdgePolicy.EXEC_TIME_ASC):
            self._static_key = dict(self._dur)
        else:
            self._static_key = None

    def __len__(self):
        return len(self._entries)

    def __bool__(self):
        return bool(self._entries)

    def __iter__(self) -> Iterator[Task]:
        return (e[2] for e in self._entries)

    def tasks(self) -> List[Task]:
        return [e[2] for e in self._entries]

    def priority_key(self, task: Task) -> float:
        if self._static_key is None:
            return task.sched_deadline_ts
        return self._static_key[task.model_id]

    def duration(self, task: Task) -> float:
        return self._dur[task.model_id]

    def _position(self, task: Task) -> int:
        # New tasks sort after every queued task with an equal key.
        return bisect_right(self._entries, (self.priority_key(task), self._seq + 1))

    def insert(self, task: Task) -> None:
        key = self.priority_key(task)
        self._seq += 1
        self._entries.insert(bisect_right(self._entries, (key, self._seq)), (key, self._seq, task))
        task.state = "edge_queued"

    def peek(self) -> Optional[Task]:
        return self._entries[0][2] if self._entries else None

    def pop_head(self) -> Optional[Task]:
        """Remove and return the highest-priority task, or None when empty."""
        if not self._entries:
            return None
        return self._entries.pop(0)[2]

    def remove(self, task: Task) -> bool:
        for i, e in enumerate(self._entries):
            if e[2] is task:
                del self._entries[i]
                return True
        return False

    def remove_tasks_of_model(self, model_id: str,
                              predicate: Callable[[Task], bool] = lambda t: True) -> List[Task]:
        """Scan from the head and remove every task of ``model_id`` accepted by ``predicate``."""
        removed, kept = [], []
        for e in self._entries:
            t = e[2]
            if t.model_id == model_id and predicate(t):
                removed.append(t)
            else:
                kept.append(e)
        if removed:
            self._entries = kept
        return removed

    def feasibility_check(self, candidate: Task, now: float, busy_until: float) -> bool:
        """True iff the candidate would finish by its deadline behind the tasks ahead of it."""
        t = now if now > busy_until else busy_until
        dur = self._dur
        for e in self._entries[:self._position(candidate)]:
            t += dur[e[2].model_id]
        return t + dur[candidate.model_id] <= candidate.sched_deadline_ts

    def newly_infeasible(self, candidate: Task, now: float, busy_until: float) -> List[Task]:
        """Lower-priority queued tasks that meet their deadline now but not after inserting ``candidate``."""
        dur = self._dur
        pos = self._position(candidate)
        t = now if now > busy_until else busy_until
        entries = self._entries
        for e in entries[:pos]:
            t += dur[e[2].model_id]
        shift = dur[candidate.model_id]
        out = []
        for e in entries[pos:]:
            task = e[2]
            t += dur[task.model_id]
            dl = task.sched_deadline_ts
            if t <= dl < t + shift:
                out.append(task)
        return out

    def violations_after_delay(self, delay: float, now: float, busy_until: float) -> bool:
        """Would pushing the whole queue back by ``delay`` make some on-time task late?"""
        dur = self._dur
        t = now if now > busy_until else busy_until
        for e in self._entries:
            task = e[2]
            t += dur[task.model_id]
            if t <= task.sched_deadline_ts < t + delay:
                return True
        return False

    def projected_finishes(self, now: float, busy_until: float, extra: Optional[Task] = None):
        """Expected ``(task, finish_ts)`` for every queued task (plus ``extra`` at its slot)."""
        dur = self._dur
        t = now if now > busy_until else busy_until
        items = self.tasks()
        if extra is not None:
            items.insert(self._position(extra), extra)
        out = []
        for task in items:
            t += dur[task.model_id]
            out.append((task, t))
        return out

    def insert_with_migration(self, candidate: Task, now: float, busy_until: float,
                              cloud_feasible: Callable[[Task], bool]) -> InsertionDecision:
        """Insert ``candidate``, possibly migrating displaced tasks out.

        The caller must already have checked the candidate's own
        feasibility. The displaced set is computed once against the
        hypothetical post-insertion schedule. Migrated tasks are removed
        here; handing them to the cloud is the caller's job.
        """
        victims = self.newly_infeasible(candidate, now, busy_until)
        if not victims:
            self.insert(candidate)
            return InsertionDecision(InsertAction.INSERT_EDGE)
        profiles = self.profiles
        cand_score = migration_score(profiles[candidate.model_id], cloud_feasible(candidate))
        victim_score = sum(migration_score(profiles[v.model_id], cloud_feasible(v)) for v in victims)
        if victim_score < cand_score:
            gone = set(map(id, victims))
            self._entries = [e for e in self._entries if id(e[2]) not in gone]
            self.insert(candidate)
            return InsertionDecision(InsertAction.INSERT_EDGE_AND_MIGRATE, victims,
                                     cand_score, victim_score)
        return InsertionDecision(InsertAction.REDIRECT_CLOUD, [], cand_score, victim_score)
