"""Deterministic virtual-time simulation of one edge base station and its cloud.

The pipeline per edge: segment arrivals fan out into tasks, the task
scheduler hands each to the policy, the single edge executor runs the
edge queue synchronously, and an elastic pool of cloud executors runs
due cloud tasks. Events at equal timestamps are ordered by phase (edge
finish, cloud finish, cloud trigger, arrival, window close) and then by
scheduling sequence.
"""

from __future__ import annotations

import heapq
import math
from collections import deque
from typing import Dict, List, Optional, Sequence

from .cloud_queue import CloudAction, CloudQueue
from .edge_queue import EdgeQueue
from .estimator import make_estimators
from .model import Disposition, ModelProfile, Task, TaskOutcome
from .network import DurationSampler, NetworkModel
from .policies import Decision, Policy
from .qoe import QoeMonitor

# Phases order same-timestamp events.
EDGE_FINISH = 0
CLOUD_FINISH = 1
CLOUD_TRIGGER = 2
ARRIVAL = 3
WINDOW_CLOSE = 4

EVENT_NAMES = {EDGE_FINISH: "EdgeFinish", CLOUD_FINISH: "CloudFinish",
               CLOUD_TRIGGER: "CloudTrigger", ARRIVAL: "SegmentArrival",
               WINDOW_CLOSE: "WindowClose"}


class EdgeSim:
    """One edge, its queues and its share of the cloud, driven by an event heap.

    ``trace`` (when enabled) records ``(ts, kind, task_id)`` for every
    scheduling action, which is what the scenario tests replay against.
    """

    def __init__(self, profiles: Dict[str, ModelProfile], policy: Policy, tasks: Sequence[Task],
                 sampler: Optional[DurationSampler] = None,
                 network: Optional[NetworkModel] = None, safety_margin: float = 50.0,
                 adaptive_window: int = 10, adaptive_epsilon: float = 10.0,
                 cooling_period: float = 10_000.0, cloud_pool_size: Optional[int] = None,
                 horizon: Optional[float] = None, edge_id: int = 0, trace: bool = False):
        self.profiles = profiles
        self.policy = policy
        self.arrivals = list(tasks)
        self.tasks = list(tasks)  # arrivals plus any preloaded tasks
        self.sampler = sampler or DurationSampler()
        self.network = network or NetworkModel()
        self.edge_id = edge_id
        self.cloud_pool_size = cloud_pool_size
        self.horizon = horizon if horizon is not None else (
            max((t.arrival_ts for t in self.tasks), default=0.0))

        self.estimators = None
        if policy.adaptive:
            self.estimators = make_estimators(profiles, adaptive_window, adaptive_epsilon,
                                              cooling_period)
            estimate = self._adaptive_estimate
        else:
            static = {m: p.cloud_duration_expected_static for m, p in profiles.items()}
            estimate = static.__getitem__
        self.estimate = estimate
        self.edge_queue = EdgeQueue(profiles, policy.edge_policy) if policy.edge_policy else None
        self.cloud_queue = CloudQueue(profiles, estimate, safety_margin,
                                      policy.cloud_admission) if policy.cloud_admission else None
        self.qoe = QoeMonitor(profiles, reschedule=policy.qoe_reschedule)
        self.min_edge_time = min(p.edge_duration_expected for p in profiles.values())

        self.busy_task: Optional[Task] = None
        self.busy_until = 0.0
        self.busy_start = 0.0
        self.edge_busy_time = 0.0
        self.cloud_in_flight = 0
        self.cloud_waiting: deque = deque()

        self.outcomes: Dict[int, TaskOutcome] = {}
        self._start: Dict[int, float] = {}
        self._stolen = set()
        self._migrated = set()
        self._rescheduled = set()
        self._buffered = set()
        self._expected_cloud: Dict[int, float] = {}
        self.timeline: List[dict] = []
        self.trace: Optional[list] = [] if trace else None
        self.now = 0.0
        self.last_event_ts = 0.0

        self._heap: list = []
        self._seq = 0
        self._preloaded = False

    # -- helpers -------------------------------------------------------

    def _adaptive_estimate(self, model_id: str) -> float:
        return self.estimators[model_id].current_estimate

    def _log(self, kind: str, task: Optional[Task]):
        if self.trace is not None:
            self.trace.append((self.now, kind, None if task is None else task.task_id))

    def _push(self, ts: float, phase: int, payload=None):
        self._seq += 1
        heapq.heappush(self._heap, (ts, phase, self._seq, payload))

    def cloud_feasible(self, task: Task, now: float) -> bool:
        """Cloud admission test at ``now`` using the current cloud estimate."""
        return now + self.estimate(task.model_id) <= task.sched_deadline_ts

    # -- lifecycle -----------------------------------------------------

    def _finalize(self, task: Task, disposition: Disposition, now: float,
                  start: Optional[float] = None, duration: Optional[float] = None):
        profile = self.profiles[task.model_id]
        if disposition is Disposition.EDGE_ON_TIME:
            util = profile.benefit - profile.edge_cost
        elif disposition is Disposition.EDGE_MISSED:
            util = -profile.edge_cost
        elif disposition is Disposition.CLOUD_ON_TIME:
            util = profile.benefit - profile.cloud_cost
        elif disposition is Disposition.CLOUD_MISSED:
            util = -profile.cloud_cost
        else:
            util = 0
        tid = task.task_id
        task.state = "done"
        self.outcomes[tid] = TaskOutcome(
            task_id=tid, model_id=task.model_id, disposition=disposition, qos_utility=util,
            arrival_ts=task.arrival_ts, deadline_ts=task.deadline_ts, finalized_ts=now,
            start_ts=start, finish_ts=None if start is None else now, actual_duration=duration,
            stolen=tid in self._stolen, gems_rescheduled=tid in self._rescheduled,
            migrated=tid in self._migrated, drone_id=task.drone_id, edge_id=task.edge_id,
        )
        self._log(disposition.value, task)
        qoe = self.qoe
        if task.model_id in qoe.windows:
            moved = qoe.on_task_finalized(
                task.model_id, now, disposition.on_time,
                self.edge_queue if self.edge_queue is not None else None,
                self._gems_viable)
            for t in moved:
                self._rescheduled.add(t.task_id)
                self._log("GemsReschedule", t)
                self.cloud_queue.push(t, now, stealable=False)
                self._push(now, CLOUD_TRIGGER)

    def _gems_viable(self, task: Task, ts: float) -> bool:
        p = self.profiles[task.model_id]
        return p.benefit - p.cloud_cost > 0 and ts + self.estimate(task.model_id) <= task.deadline_ts

    def _drop(self, task: Task, now: float, reason: str):
        self._log(reason, task)
        self._finalize(task, Disposition.DROPPED, now)

    def _to_cloud(self, task: Task, now: float):
        cq = self.cloud_queue
        if cq is None:
            self._drop(task, now, "DropNoCloud")
            return
        trigger = cq.admit(task, now)
        if trigger is None:
            if self.estimators is not None and not self.cloud_feasible(task, now):
                self._note_skip(task.model_id, now)
            self._drop(task, now, "DropAdmission")
            return
        self._log("CloudQueued", task)
        self._push(trigger, CLOUD_TRIGGER)

    def _note_skip(self, model_id: str, now: float):
        est = self.estimators[model_id]
        est.note_skip(now)
        if est.maybe_reset(now):
            self._log("EstimatorReset", None)

    # -- edge executor -------------------------------------------------

    def edge_executor_step(self, now: float) -> None:
        """Start the next edge task if the edge is idle (steal first when there is slack)."""
        if self.busy_task is not None or self.edge_queue is None:
            return
        eq = self.edge_queue
        cq = self.cloud_queue
        stealing = self.policy.stealing and cq is not None
        while True:
            head = eq.peek()
            if head is None:
                if stealing and len(cq):
                    stolen = cq.select_steal(math.inf, now, eq)
                    if stolen is not None:
                        self._start_edge(stolen, now, stolen=True)
                return
            t_head = eq.duration(head)
            if now + t_head > head.sched_deadline_ts:
                eq.pop_head()
                self._drop(head, now, "EdgeJitDrop")
                if self.busy_task is not None:
                    return
                continue
            if stealing and len(cq):
                slack = head.sched_deadline_ts - (now + t_head)
                if slack >= self.min_edge_time:
                    stolen = cq.select_steal(slack, now, eq)
                    if stolen is not None:
                        self._start_edge(stolen, now, stolen=True)
                        return
            eq.pop_head()
            self._start_edge(head, now)
            return

    def _start_edge(self, task: Task, now: float, stolen: bool = False):
        if stolen:
            self._stolen.add(task.task_id)
            self._log("Steal", task)
        self._log("EdgeStart", task)
        task.state = "edge_running"
        p = self.profiles[task.model_id]
        self.busy_task = task
        self.busy_start = now
        self.busy_until = now + p.edge_duration_expected
        actual = self.sampler.edge(task.index, task.model_id, p.edge_duration_expected)
        self._push(now + actual, EDGE_FINISH, task)

    def _on_edge_finish(self, task: Task, now: float):
        start = self.busy_start
        self.busy_task = None
        self.busy_until = now
        self.edge_busy_time += now - start
        if now <= task.deadline_ts:
            self.policy.on_edge_success(task, now)
            self._finalize(task, Disposition.EDGE_ON_TIME, now, start, now - start)
        else:
            self._finalize(task, Disposition.EDGE_MISSED, now, start, now - start)

    # -- cloud executor ------------------------------------------------

    def _on_cloud_trigger(self, now: float):
        for task, action in self.cloud_queue.pop_due(now):
            if action is CloudAction.DISPATCH:
                if self.cloud_pool_size is not None and self.cloud_in_flight >= self.cloud_pool_size:
                    self.cloud_waiting.append(task)
                else:
                    self._dispatch_cloud(task, now)
            else:
                if self.estimators is not None and self.profiles[task.model_id].cloud_utility >= 0:
                    self._note_skip(task.model_id, now)
                self._drop(task, now, "CloudJitDrop")

    def _dispatch_cloud(self, task: Task, now: float):
        p = self.profiles[task.model_id]
        if now + self.estimate(task.model_id) > task.sched_deadline_ts:
            self._drop(task, now, "CloudJitDrop")
            return
        self._log("CloudDispatch", task)
        task.state = "cloud_running"
        compute = self.sampler.cloud(task.index, task.model_id, p.cloud_duration_expected_static)
        e2e = compute + self.network.network_delay(now, task.payload_bytes)
        self._start[task.task_id] = now
        self._expected_cloud[task.task_id] = self.estimate(task.model_id)
        self.cloud_in_flight += 1
        if self.estimators is not None:
            self.estimators[task.model_id].note_attempt(now)
        self._push(now + e2e, CLOUD_FINISH, task)

    def _on_cloud_finish(self, task: Task, now: float):
        self.cloud_in_flight -= 1
        start = self._start.pop(task.task_id)
        duration = now - start
        met = now <= task.deadline_ts
        self.timeline.append({
            "model_id": task.model_id, "task_id": task.task_id, "dispatch_ts": start,
            "observed_cloud_ms": duration,
            "expected_cloud_ms": self._expected_cloud.pop(task.task_id),
            "added_latency_ms": self.network.network_delay(start, task.payload_bytes),
            "met_deadline": met,
        })
        if self.estimators is not None:
            self.estimators[task.model_id].observe(duration, now)
        self._finalize(task, Disposition.CLOUD_ON_TIME if met else Disposition.CLOUD_MISSED,
                       now, start, duration)
        while self.cloud_waiting and (self.cloud_pool_size is None
                                      or self.cloud_in_flight < self.cloud_pool_size):
            self._dispatch_cloud(self.cloud_waiting.popleft(), now)

    # -- arrivals ------------------------------------------------------

    def _on_arrival(self, task: Task, now: float):
        self._log("Arrival", task)
        res = self.policy.dispatch(task, now, self)
        if res.buffered:
            self._buffered.add(task.task_id)
        for m in res.migrated:
            self._migrated.add(m.task_id)
            self._log("Migrate", m)
            self._to_cloud(m, now)
        if res.decision is Decision.TO_EDGE:
            self._log("EdgeQueued", task)
        elif res.decision is Decision.TO_CLOUD:
            self._to_cloud(task, now)
        else:
            self._drop(task, now, "DropPolicy")

    def preload(self, now: float, edge_tasks: Sequence[Task] = (),
                cloud_entries: Sequence[tuple] = ()) -> None:
        """Start from a given queue state instead of from arrivals.

        ``cloud_entries`` are ``(task, trigger_ts, negative)`` triples. The
        preloaded tasks count as generated, so conservation still holds.
        """
        self.now = self.last_event_ts = now
        for t in edge_tasks:
            self.edge_queue.insert(t)
            self.tasks.append(t)
        for t, trigger, negative in cloud_entries:
            self.cloud_queue.push(t, trigger, negative)
            self._push(trigger, CLOUD_TRIGGER)
            self.tasks.append(t)
        self._preloaded = True

    # -- main loop -----------------------------------------------------

    def run(self) -> "EdgeSim":
        tasks = self.arrivals
        n = len(tasks)
        i = 0
        heap = self._heap
        qoe = self.qoe
        w_end = qoe.next_window_end()
        if w_end is not None:
            self._push(w_end, WINDOW_CLOSE)
        pop = heapq.heappop
        if self._preloaded:
            self.edge_executor_step(self.now)
        while True:
            if i < n and (not heap or (tasks[i].arrival_ts, ARRIVAL) < heap[0][:2]):
                task = tasks[i]
                i += 1
                now = self.now = task.arrival_ts
                self._on_arrival(task, now)
            elif heap:
                now, phase, _, payload = pop(heap)
                self.now = now
                if phase == EDGE_FINISH:
                    self._on_edge_finish(payload, now)
                elif phase == CLOUD_FINISH:
                    self._on_cloud_finish(payload, now)
                elif phase == CLOUD_TRIGGER:
                    self._on_cloud_trigger(now)
                else:
                    qoe.close_due(now)
                    if i < n or len(heap) > 0 or self.busy_task is not None:
                        self._push(qoe.next_window_end(), WINDOW_CLOSE)
                    continue
            else:
                break
            self.last_event_ts = now
            if self.busy_task is None:
                self.edge_executor_step(now)
        # Close the windows still holding finalized tasks.
        for model_id, w in qoe.windows.items():
            if w.total_count:
                qoe.close_window(model_id, w.window_end)
        missing = len(self.tasks) - len(self.outcomes)
        if missing:
            raise RuntimeError(f"{missing} tasks never reached a final state")
        return self


def build_edge_sim(config, edge_id: int = 0, trace: bool = False) -> EdgeSim:
    """Wire one edge of an experiment: workload, policy, samplers, network."""
    from .policies import make_policy
    from .workload import generate

    tasks = generate(config.workload, config.profiles, edge_id)
    policy = make_policy(config.policy, config.policy_params)
    sampler = DurationSampler(config.durations.mode, seed=config.seed, n=len(tasks),
                              stream=edge_id, edge_sigma=config.durations.edge_sigma,
                              cloud_sigma=config.durations.cloud_sigma,
                              samples=config.durations.samples())
    net = config.network
    network = NetworkModel(net.mode, net.base_latency, net.trapezoid, net.trace_for(edge_id))
    return EdgeSim(config.profiles, policy, tasks, sampler, network,
                   safety_margin=config.safety_margin,
                   adaptive_window=config.adaptive.window,
                   adaptive_epsilon=config.adaptive.epsilon,
                   cooling_period=config.adaptive.cooling_period,
                   cloud_pool_size=config.cloud_pool_size,
                   horizon=config.workload.duration, edge_id=edge_id, trace=trace)


def run(config):
    """Simulate every edge of ``config`` and return the aggregated MetricsReport."""
    from .report import build_report

    sims = [build_edge_sim(config, e).run() for e in range(config.edges)]
    return build_report(config, sims)
