"""Tumbling-window completion-rate tracking and greedy edge-to-cloud rescheduling."""

from __future__ import annotations

from typing import Callable, Dict, List, Mapping, Optional

from .model import ModelProfile, Task, WindowState, qoe_window_utility


class QoeMonitor:
    """One tumbling window per QoE-enabled model, all starting at ``start_ts``.

    A window covers ``(window_start, window_end]``. Tasks are assigned by
    the timestamp at which they were finalized (completed or dropped).
    With ``reschedule`` off the monitor only keeps score, which is how
    QoE utility is reported for policies that do not act on it.
    """

    def __init__(self, profiles: Mapping[str, ModelProfile], start_ts: float = 0.0,
                 reschedule: bool = True):
        self.profiles = profiles
        self.reschedule = reschedule
        self.windows: Dict[str, WindowState] = {
            m: WindowState(m, start_ts, start_ts + p.qoe_window)
            for m, p in profiles.items() if p.qoe_enabled
        }
        self.total_qoe_utility = 0
        self.closed: List[dict] = []

    def __contains__(self, model_id):
        return model_id in self.windows

    def _advance(self, model_id: str, ts: float) -> None:
        w = self.windows[model_id]
        while ts > w.window_end:
            self.close_window(model_id, w.window_end)

    def on_task_finalized(self, model_id: str, ts: float, deadline_met: bool,
                          edge_queue=None,
                          cloud_viable: Optional[Callable[[Task, float], bool]] = None
                          ) -> List[Task]:
        """Count one finalized task; return edge-queued tasks to move to the cloud.

        When the window's running on-time rate falls below the target,
        every queued edge task of the model that ``cloud_viable`` accepts
        is removed from ``edge_queue`` and returned, head first.
        """
        w = self.windows.get(model_id)
        if w is None:
            return []
        self._advance(model_id, ts)
        w.total_count += 1
        if deadline_met:
            w.success_count += 1
        if (self.reschedule and edge_queue is not None
                and w.incremental_rate < self.profiles[model_id].qoe_rate):
            if cloud_viable is None:
                return edge_queue.remove_tasks_of_model(model_id)
            return edge_queue.remove_tasks_of_model(model_id, lambda t: cloud_viable(t, ts))
        return []

    def close_window(self, model_id: str, ts: float) -> int:
        """Evaluate and tumble the model's current window; returns the bonus earned."""
        w = self.windows[model_id]
        profile = self.profiles[model_id]
        gained = qoe_window_utility(w, profile)
        w.accrued_qoe += gained
        self.total_qoe_utility += gained
        self.closed.append({
            "model_id": model_id,
            "window_start": w.window_start,
            "window_end": w.window_end,
            "total": w.total_count,
            "success": w.success_count,
            "rate": w.incremental_rate,
            "qoe_utility": gained,
        })
        w.window_start = w.window_end
        w.window_end = w.window_end + profile.qoe_window
        w.total_count = 0
        w.success_count = 0
        return gained

    def close_due(self, ts: float) -> int:
        """Close every window whose end is at or before ``ts``."""
        gained = 0
        for model_id, w in self.windows.items():
            while w.window_end <= ts:
                gained += self.close_window(model_id, w.window_end)
        return gained

    def next_window_end(self) -> Optional[float]:
        if not self.windows:
            return None
        return min(w.window_end for w in self.windows.values())
