"""Edge-to-cloud network models and seeded execution-duration samplers."""

from __future__ import annotations

import bisect
import csv
import enum
import math
from dataclasses import dataclass, field
from pathlib import Path
from statistics import NormalDist
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np

from .errors import ConfigError


class NetworkMode(str, enum.Enum):
    STATIC = "static"
    TRAPEZOID = "trapezoid"
    BANDWIDTH_TRACE = "bandwidth_trace"


@dataclass
class Trapezoid:
    """Additive latency: ``low`` outside, linear ramps, ``high`` on the plateau."""

    low: float = 0.0
    high: float = 400.0
    ramp_up: Tuple[float, float] = (60_000.0, 90_000.0)
    ramp_down: Tuple[float, float] = (210_000.0, 240_000.0)

    def __post_init__(self):
        if self.low < 0 or self.high < 0:
            raise ConfigError("network.trapezoid", "latencies must be >= 0")
        a, b = self.ramp_up
        c, d = self.ramp_down
        if not a <= b <= c <= d:
            raise ConfigError("network.trapezoid", "ramps must be ordered and non-overlapping")

    def __call__(self, now: float) -> float:
        a, b = self.ramp_up
        c, d = self.ramp_down
        if now < a or now >= d:
            return self.low
        if now < b:
            return self.low + (self.high - self.low) * (now - a) / (b - a)
        if now < c:
            return self.high
        return self.high + (self.low - self.high) * (now - c) / (d - c)


@dataclass
class NetworkModel:
    """Extra edge-to-cloud delay on top of the profiled cloud duration.

    Profiled cloud durations are already end-to-end, so the static mode
    adds nothing. Trace bandwidths are bytes per second, piecewise
    constant, holding the last value past the end of the trace.
    """

    mode: NetworkMode = NetworkMode.STATIC
    base_latency: float = 0.0
    trapezoid: Trapezoid = field(default_factory=Trapezoid)
    trace: Sequence[Tuple[float, float]] = ()

    def __post_init__(self):
        self.mode = NetworkMode(self.mode)
        if self.base_latency < 0:
            raise ConfigError("network.base_latency_ms", "must be >= 0")
        if self.mode is NetworkMode.BANDWIDTH_TRACE:
            if not self.trace:
                raise ConfigError("network.trace_file", "bandwidth trace is empty")
            if any(bw <= 0 for _, bw in self.trace):
                raise ConfigError("network.trace_file", "bandwidth must be > 0")
        self.trace = sorted(self.trace)
        self._trace_ts = [ts for ts, _ in self.trace]

    def bandwidth(self, now: float) -> float:
        i = bisect.bisect_right(self._trace_ts, now) - 1
        return self.trace[max(i, 0)][1]

    def network_delay(self, now: float, payload_bytes: int) -> float:
        if payload_bytes < 0:
            raise ValueError("payload_bytes must be >= 0")
        if self.mode is NetworkMode.STATIC:
            return 0.0
        if self.mode is NetworkMode.TRAPEZOID:
            return self.trapezoid(now)
        return 1000.0 * payload_bytes / self.bandwidth(now) + self.base_latency

    def latency_series(self, until: float, step: float = 1000.0) -> List[Tuple[float, float]]:
        """``(ts, added delay for a 38 kB payload)`` samples, for plotting."""
        n = int(until // step) + 1
        return [(i * step, self.network_delay(i * step, 38_000)) for i in range(n)]


def load_bandwidth_trace(path, edge_id: Optional[int] = None) -> List[Tuple[float, float]]:
    """Read ``ts_ms,bandwidth_bps[,edge_id]``; bandwidth is in bits/s and returned as bytes/s."""
    path = Path(path)
    rows = []
    try:
        with open(path, newline="", encoding="utf-8") as f:
            reader = csv.DictReader(f)
            if not reader.fieldnames or not {"ts_ms", "bandwidth_bps"} <= set(reader.fieldnames):
                raise ConfigError("network.trace_file",
                                  f"{path}: header must be ts_ms,bandwidth_bps[,edge_id]")
            has_edge = "edge_id" in reader.fieldnames
            for line_no, row in enumerate(reader, start=2):
                try:
                    ts = float(row["ts_ms"])
                    bps = float(row["bandwidth_bps"])
                except (TypeError, ValueError):
                    raise ConfigError("network.trace_file", f"{path}:{line_no}: bad number") from None
                if has_edge and edge_id is not None and row["edge_id"] not in ("", None):
                    if int(row["edge_id"]) != edge_id:
                        continue
                rows.append((ts, bps / 8.0))
    except OSError as e:
        raise ConfigError("network.trace_file", f"{path}: {e.strerror}") from None
    if not rows:
        raise ConfigError("network.trace_file", f"{path}: no samples for edge {edge_id}")
    return rows


class DurationMode(str, enum.Enum):
    DETERMINISTIC = "deterministic"
    LOGNORMAL = "lognormal"
    TRACE_REPLAY = "trace_replay"


class DurationSampler:
    """Actual execution durations, a pure function of (seed, stream, draw index).

    Lognormal draws are anchored so the profiled expected duration sits at
    the benchmark percentile it came from (99th on the edge, 95th on the
    cloud); ``edge_sigma``/``cloud_sigma`` are the log-space spreads.
    The draw index is the task's index within its stream, so every policy
    sees the same durations for the same task.
    """

    def __init__(self, mode=DurationMode.DETERMINISTIC, seed: int = 0, n: int = 0,
                 stream: int = 0, edge_sigma: float = 0.05, cloud_sigma: float = 0.15,
                 edge_quantile: float = 0.99, cloud_quantile: float = 0.95,
                 samples: Optional[Dict[str, Dict[str, List[float]]]] = None):
        self.mode = DurationMode(mode)
        self.seed = seed
        self.edge_sigma = edge_sigma
        self.cloud_sigma = cloud_sigma
        self.samples = samples or {}
        self._edge_mult = self._cloud_mult = None
        if self.mode is DurationMode.LOGNORMAL:
            ss = np.random.SeedSequence([seed, stream])
            edge_rng, cloud_rng = (np.random.Generator(np.random.PCG64(s)) for s in ss.spawn(2))
            z_e = NormalDist().inv_cdf(edge_quantile)
            z_c = NormalDist().inv_cdf(cloud_quantile)
            self._edge_mult = np.exp(edge_sigma * (edge_rng.standard_normal(n) - z_e)).tolist()
            self._cloud_mult = np.exp(cloud_sigma * (cloud_rng.standard_normal(n) - z_c)).tolist()
        elif self.mode is DurationMode.TRACE_REPLAY and not self.samples:
            raise ConfigError("durations.trace_file", "trace replay needs samples")

    def edge(self, index: int, model_id: str, expected: float) -> float:
        if self._edge_mult is not None:
            return expected * self._edge_mult[index]
        if self.mode is DurationMode.TRACE_REPLAY:
            return self._replay(model_id, "edge", index, expected)
        return expected

    def cloud(self, index: int, model_id: str, expected: float) -> float:
        if self._cloud_mult is not None:
            return expected * self._cloud_mult[index]
        if self.mode is DurationMode.TRACE_REPLAY:
            return self._replay(model_id, "cloud", index, expected)
        return expected

    def _replay(self, model_id, kind, index, expected):
        seq = self.samples.get(model_id, {}).get(kind)
        if not seq:
            return expected
        return seq[index % len(seq)]


def load_duration_samples(path) -> Dict[str, Dict[str, List[float]]]:
    """Read ``model_id,resource,duration_ms`` rows (resource is ``edge`` or ``cloud``)."""
    out: Dict[str, Dict[str, List[float]]] = {}
    try:
        with open(Path(path), newline="", encoding="utf-8") as f:
            for row in csv.DictReader(f):
                d = float(row["duration_ms"])
                if not d > 0 or math.isinf(d):
                    raise ConfigError("durations.trace_file", f"non-positive duration {d}")
                out.setdefault(row["model_id"], {}).setdefault(row["resource"], []).append(d)
    except OSError as e:
        raise ConfigError("durations.trace_file", f"{path}: {e.strerror}") from None
    except KeyError as e:
        raise ConfigError("durations.trace_file", f"missing column {e}") from None
    return out
