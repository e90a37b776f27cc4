"""Cloud-bound task queue ordered by trigger time."""

from __future__ import annotations

import enum
import heapq
from typing import Callable, List, Mapping, Optional, Tuple

from .model import ModelProfile, Task, steal_order_key


class CloudAdmission(str, enum.Enum):
    # Immediate dispatch; feasible and non-negative cloud utility only.
    EC = "E+C"
    # Immediate dispatch; feasible regardless of utility sign.
    ANY_SIGN = "AnySign"
    # Deferred to a trigger time; negative-utility tasks wait for a steal.
    DEFERRED = "Deferred"


class CloudAction(str, enum.Enum):
    DISPATCH = "Dispatch"
    JIT_DROP = "JitDrop"


class CloudQueue:
    """Heap of ``(trigger_ts, seq, task, negative_utility)``.

    ``estimate`` maps a model id to the current expected end-to-end cloud
    duration (static, or adapted under DEMS-A).
    """

    def __init__(self, profiles: Mapping[str, ModelProfile],
                 estimate: Optional[Callable[[str], float]] = None,
                 safety_margin: float = 50.0, admission=CloudAdmission.DEFERRED):
        self.profiles = profiles
        self.safety_margin = safety_margin
        self.admission = CloudAdmission(admission)
        if estimate is None:
            static = {m: p.cloud_duration_expected_static for m, p in profiles.items()}
            estimate = static.__getitem__
        self.estimate = estimate
        self._heap: list = []
        self._seq = 0
        self._removed = set()  # seq numbers of stolen entries (lazy deletion)
        self._pinned = set()  # seq numbers the edge may not steal back
        self._live = 0

    def __len__(self):
        return self._live

    def entries(self) -> List[Tuple[float, Task, bool]]:
        """Live entries in trigger order."""
        return [(e[0], e[2], e[3]) for e in sorted(self._heap) if e[1] not in self._removed]

    def next_trigger(self) -> Optional[float]:
        self._prune()
        return self._heap[0][0] if self._heap else None

    def _prune(self):
        heap = self._heap
        while heap and heap[0][1] in self._removed:
            self._removed.discard(heapq.heappop(heap)[1])

    def push(self, task: Task, trigger_ts: float, negative: bool = False,
             stealable: bool = True) -> None:
        self._seq += 1
        heapq.heappush(self._heap, (trigger_ts, self._seq, task, negative))
        if not stealable:
            self._pinned.add(self._seq)
        self._live += 1
        task.state = "cloud_queued"

    def admit(self, task: Task, now: float, expected_cloud_duration: Optional[float] = None,
              policy=None) -> Optional[float]:
        """Try to queue ``task``; returns its trigger time, or None when it must be dropped."""
        policy = self.admission if policy is None else CloudAdmission(policy)
        profile = self.profiles[task.model_id]
        t_cloud = self.estimate(task.model_id) if expected_cloud_duration is None \
            else expected_cloud_duration
        deadline = task.sched_deadline_ts
        feasible = now + t_cloud <= deadline
        gamma_cloud = profile.cloud_utility
        if policy is CloudAdmission.EC:
            if feasible and gamma_cloud >= 0:
                self.push(task, now)
                return now
            return None
        if policy is CloudAdmission.ANY_SIGN:
            if feasible:
                self.push(task, now)
                return now
            return None
        if gamma_cloud < 0:
            # Only useful if the edge steals it; wait until the latest edge start.
            trigger = deadline - profile.edge_duration_expected
            if trigger < now:
                return None
            self.push(task, trigger, negative=True)
            return trigger
        if not feasible:
            return None
        trigger = max(now, deadline - t_cloud - self.safety_margin)
        self.push(task, trigger)
        return trigger

    def pop_due(self, now: float) -> List[Tuple[Task, CloudAction]]:
        """Remove every entry whose trigger time has been reached, with its fate."""
        out = []
        heap = self._heap
        removed = self._removed
        while heap and heap[0][0] <= now:
            _, seq, task, negative = heapq.heappop(heap)
            if seq in removed:
                removed.discard(seq)
                continue
            self._live -= 1
            if negative or now + self.estimate(task.model_id) > task.sched_deadline_ts:
                out.append((task, CloudAction.JIT_DROP))
            else:
                out.append((task, CloudAction.DISPATCH))
        return out

    def select_steal(self, slack: float, now: float, edge_queue) -> Optional[Task]:
        """Pick and remove the best task the edge can run right now without hurting its queue.

        Eligible entries fit in ``slack``, would meet their own deadline if
        started at ``now``, and do not push any on-time edge task past its
        deadline. Negative-cloud-utility tasks win, then the best rank.
        """
        best = None
        best_key = None
        profiles = self.profiles
        checked = {}
        for entry in self._heap:
            if entry[1] in self._removed or entry[1] in self._pinned:
                continue
            task = entry[2]
            p = profiles[task.model_id]
            t_edge = p.edge_duration_expected
            if t_edge > slack or now + t_edge > task.sched_deadline_ts:
                continue
            key = (steal_order_key(p), entry[0], entry[1])
            if best_key is not None and key >= best_key:
                continue
            ok = checked.get(t_edge)
            if ok is None:
                ok = checked[t_edge] = not edge_queue.violations_after_delay(t_edge, now, now)
            if ok:
                best, best_key = entry, key
        if best is None:
            return None
        self._removed.add(best[1])
        self._live -= 1
        self._prune()
        return best[2]
