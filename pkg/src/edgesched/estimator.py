"""Per-model sliding-window estimate of end-to-end cloud duration."""

from __future__ import annotations

from collections import deque
from typing import Dict, Mapping, Optional

from .model import ModelProfile


class CloudEstimator:
    """Raises the expected cloud duration when observations run persistently slow.

    The estimate only moves upward through :meth:`observe`. If tasks of
    the model keep being skipped for ``cooling_period`` ms, :meth:`maybe_reset`
    restores the static default so the cloud gets probed again.
    """

    def __init__(self, model_id: str, static_default: float, window: int = 10,
                 epsilon: float = 10.0, cooling_period: float = 10_000.0):
        if window < 1:
            raise ValueError("window must be >= 1")
        self.model_id = model_id
        self.static_default = float(static_default)
        self.current_estimate = float(static_default)
        self.epsilon = epsilon
        self.cooling_period = cooling_period
        self.buffer: deque = deque(maxlen=window)
        self.last_cloud_attempt_ts: Optional[float] = None
        self.skipping_since: Optional[float] = None
        self.updates = 0
        self.resets = 0

    @property
    def window(self) -> int:
        return self.buffer.maxlen

    def observe(self, actual_cloud_duration: float, now: float) -> float:
        if actual_cloud_duration <= 0:
            raise ValueError("cloud duration must be positive")
        self.buffer.append(actual_cloud_duration)
        mean = sum(self.buffer) / len(self.buffer)
        if mean - self.current_estimate > self.epsilon:
            self.current_estimate = mean
            self.updates += 1
        self.note_attempt(now)
        return self.current_estimate

    def note_attempt(self, now: float) -> None:
        """A task of this model went to (or came back from) the cloud."""
        self.last_cloud_attempt_ts = now
        self.skipping_since = None

    def note_skip(self, now: float) -> None:
        """A task of this model was kept off the cloud as infeasible."""
        if self.skipping_since is None:
            self.skipping_since = now

    def maybe_reset(self, now: float) -> bool:
        if self.skipping_since is None or now - self.skipping_since < self.cooling_period:
            return False
        self.current_estimate = self.static_default
        self.buffer.clear()
        self.skipping_since = None
        self.resets += 1
        return True


def make_estimators(profiles: Mapping[str, ModelProfile], window: int = 10,
                    epsilon: float = 10.0,
                    cooling_period: float = 10_000.0) -> Dict[str, CloudEstimator]:
    return {
        m: CloudEstimator(m, p.cloud_duration_expected_static, window, epsilon, cooling_period)
        for m, p in profiles.items()
    }
