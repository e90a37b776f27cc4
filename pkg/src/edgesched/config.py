"""Experiment configuration: one JSON document describes a run completely."""

from __future__ import annotations

import copy
import json
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Any, Dict, List, Mapping, Optional

from .errors import ConfigError
from .model import (ProfileTable, gems_profiles, profiles_from_dict, profiles_to_dict,
                    table1_profiles)
from .network import (DurationMode, NetworkMode, Trapezoid, load_bandwidth_trace,
                      load_duration_samples)
from .policies import PolicyId, PolicyParams, parse_policy_id
from .workload import WorkloadSpec

_TOP_KEYS = {"name", "profiles", "qoe", "workload", "policy", "network", "durations", "seed",
             "seeds", "edges", "safety_margin_ms", "adaptive", "cloud_pool_size",
             "output_dir", "formats"}
FORMATS = ("json", "csv", "summary")


@dataclass
class NetworkSpec:
    mode: NetworkMode = NetworkMode.STATIC
    base_latency: float = 0.0
    trapezoid: Trapezoid = field(default_factory=Trapezoid)
    trace_file: Optional[str] = None

    def __post_init__(self):
        self.mode = NetworkMode(self.mode)

    def trace_for(self, edge_id: int):
        if self.mode is not NetworkMode.BANDWIDTH_TRACE:
            return ()
        return load_bandwidth_trace(self.trace_file, edge_id)


@dataclass
class DurationSpec:
    mode: DurationMode = DurationMode.DETERMINISTIC
    edge_sigma: float = 0.05
    cloud_sigma: float = 0.15
    trace_file: Optional[str] = None

    def __post_init__(self):
        self.mode = DurationMode(self.mode)

    def samples(self):
        if self.mode is DurationMode.TRACE_REPLAY:
            return load_duration_samples(self.trace_file)
        return None


@dataclass
class AdaptiveSpec:
    window: int = 10
    epsilon: float = 10.0
    cooling_period: float = 10_000.0


@dataclass
class ExperimentConfig:
    profiles: ProfileTable = field(default_factory=table1_profiles)
    workload: WorkloadSpec = field(default_factory=WorkloadSpec)
    policy: PolicyId = PolicyId.DEMS
    policy_params: PolicyParams = field(default_factory=PolicyParams)
    network: NetworkSpec = field(default_factory=NetworkSpec)
    durations: DurationSpec = field(default_factory=DurationSpec)
    seed: int = 0
    seeds: Optional[List[int]] = None
    edges: int = 1
    safety_margin: float = 50.0
    adaptive: AdaptiveSpec = field(default_factory=AdaptiveSpec)
    cloud_pool_size: Optional[int] = None
    name: str = "experiment"
    output_dir: str = "out"
    formats: List[str] = field(default_factory=lambda: list(FORMATS))

    def __post_init__(self):
        self.policy = parse_policy_id(self.policy)
        if self.edges < 1:
            raise ConfigError("edges", "must be >= 1")
        if self.safety_margin < 0:
            raise ConfigError("safety_margin_ms", "must be >= 0")
        if self.cloud_pool_size is not None and self.cloud_pool_size < 1:
            raise ConfigError("cloud_pool_size", "must be >= 1 or null")
        for m in self.workload.models:
            if m not in self.profiles:
                raise ConfigError("workload.model_set", f"model {m!r} has no profile")
        self.workload.seed = self.seed

    def with_overrides(self, policy=None, seed=None, output_dir=None) -> "ExperimentConfig":
        """Copy with CLI overrides applied (flags beat file values)."""
        cfg = copy.deepcopy(self)
        if policy is not None:
            cfg.policy = parse_policy_id(policy)
        if seed is not None:
            cfg.seed = int(seed)
            cfg.workload.seed = cfg.seed
        if output_dir is not None:
            cfg.output_dir = str(output_dir)
        return cfg

    def for_seed(self, seed: int) -> "ExperimentConfig":
        cfg = replace(self, seed=seed, workload=replace(self.workload, seed=seed))
        return cfg

    def to_dict(self) -> Dict[str, Any]:
        w = self.workload
        net = self.network
        tz = net.trapezoid
        return {
            "name": self.name,
            "profiles": profiles_to_dict(self.profiles),
            "workload": {
                "drones": w.drones,
                "model_set": w.model_set if isinstance(w.model_set, str) else list(w.model_set),
                "segment_interval_ms": w.segment_interval,
                "duration_ms": w.duration,
                "payload_bytes": w.payload_bytes,
            },
            "policy": {"name": self.policy.value, "params": self.policy_params.to_dict()},
            "network": {
                "mode": net.mode.value,
                "base_latency_ms": net.base_latency,
                "trapezoid": {"low_ms": tz.low, "high_ms": tz.high,
                              "ramp_up_ms": list(tz.ramp_up), "ramp_down_ms": list(tz.ramp_down)},
                "trace_file": net.trace_file,
            },
            "durations": {
                "mode": self.durations.mode.value,
                "edge_sigma": self.durations.edge_sigma,
                "cloud_sigma": self.durations.cloud_sigma,
                "trace_file": self.durations.trace_file,
            },
            "seed": self.seed,
            "seeds": self.seeds,
            "edges": self.edges,
            "safety_margin_ms": self.safety_margin,
            "adaptive": {"window": self.adaptive.window, "epsilon_ms": self.adaptive.epsilon,
                         "cooling_period_ms": self.adaptive.cooling_period},
            "cloud_pool_size": self.cloud_pool_size,
            "output_dir": self.output_dir,
            "formats": list(self.formats),
        }

    @classmethod
    def from_dict(cls, doc: Mapping, base_dir: Optional[Path] = None) -> "ExperimentConfig":
        if not isinstance(doc, Mapping):
            raise ConfigError("<root>", "config must be a JSON object")
        unknown = set(doc) - _TOP_KEYS
        if unknown:
            raise ConfigError(sorted(unknown)[0], "unknown key")
        base_dir = Path(base_dir) if base_dir is not None else Path(".")

        def path_of(p):
            if p is None:
                return None
            p = Path(p)
            return str(p if p.is_absolute() else base_dir / p)

        qoe = _section(doc, "qoe", {"rate", "window_ms"})
        profiles = _parse_profiles(doc.get("profiles", "table1"), qoe, path_of)
        wd = _section(doc, "workload", {"drones", "model_set", "segment_interval_ms",
                                        "duration_ms", "payload_bytes"})
        model_set = wd.get("model_set", "passive")
        if not isinstance(model_set, (str, list)):
            raise ConfigError("workload.model_set", "must be a name or a list of model ids")
        workload = WorkloadSpec(
            drones=_int(wd, "drones", 2, "workload"),
            model_set=model_set if isinstance(model_set, str) else tuple(model_set),
            segment_interval=_num(wd, "segment_interval_ms", 1000.0, "workload"),
            duration=_num(wd, "duration_ms", 300_000.0, "workload"),
            payload_bytes=_int(wd, "payload_bytes", 38_000, "workload"),
        )
        pol = doc.get("policy", "DEMS")
        if isinstance(pol, str):
            policy, params = parse_policy_id(pol), PolicyParams()
        elif isinstance(pol, Mapping):
            extra = set(pol) - {"name", "params"}
            if extra:
                raise ConfigError(f"policy.{sorted(extra)[0]}", "unknown key")
            if "name" not in pol:
                raise ConfigError("policy.name", "missing")
            policy = parse_policy_id(pol["name"])
            params = PolicyParams.from_dict(pol.get("params"))
        else:
            raise ConfigError("policy", "must be a name or an object with name/params")

        nd = _section(doc, "network", {"mode", "base_latency_ms", "trapezoid", "trace_file"})
        try:
            mode = NetworkMode(nd.get("mode", "static"))
        except ValueError:
            raise ConfigError("network.mode", f"unknown mode {nd.get('mode')!r}") from None
        td = nd.get("trapezoid") or {}
        if not isinstance(td, Mapping):
            raise ConfigError("network.trapezoid", "must be an object")
        bad = set(td) - {"low_ms", "high_ms", "ramp_up_ms", "ramp_down_ms"}
        if bad:
            raise ConfigError(f"network.trapezoid.{sorted(bad)[0]}", "unknown key")
        trap = Trapezoid(
            low=_num(td, "low_ms", 0.0, "network.trapezoid"),
            high=_num(td, "high_ms", 400.0, "network.trapezoid"),
            ramp_up=tuple(td.get("ramp_up_ms", (60_000.0, 90_000.0))),
            ramp_down=tuple(td.get("ramp_down_ms", (210_000.0, 240_000.0))),
        )
        if mode is NetworkMode.BANDWIDTH_TRACE and not nd.get("trace_file"):
            raise ConfigError("network.trace_file", "required for bandwidth_trace mode")
        network = NetworkSpec(mode, _num(nd, "base_latency_ms", 0.0, "network"), trap,
                              path_of(nd.get("trace_file")))
        if network.base_latency < 0:
            raise ConfigError("network.base_latency_ms", "must be >= 0")

        dd = _section(doc, "durations", {"mode", "edge_sigma", "cloud_sigma", "trace_file"})
        try:
            dmode = DurationMode(dd.get("mode", "deterministic"))
        except ValueError:
            raise ConfigError("durations.mode", f"unknown mode {dd.get('mode')!r}") from None
        if dmode is DurationMode.TRACE_REPLAY and not dd.get("trace_file"):
            raise ConfigError("durations.trace_file", "required for trace_replay mode")
        durations = DurationSpec(dmode, _num(dd, "edge_sigma", 0.05, "durations"),
                                 _num(dd, "cloud_sigma", 0.15, "durations"),
                                 path_of(dd.get("trace_file")))
        if durations.edge_sigma < 0 or durations.cloud_sigma < 0:
            raise ConfigError("durations.edge_sigma", "spreads must be >= 0")

        ad = _section(doc, "adaptive", {"window", "epsilon_ms", "cooling_period_ms"})
        adaptive = AdaptiveSpec(_int(ad, "window", 10, "adaptive"),
                                _num(ad, "epsilon_ms", 10.0, "adaptive"),
                                _num(ad, "cooling_period_ms", 10_000.0, "adaptive"))
        if adaptive.window < 1:
            raise ConfigError("adaptive.window", "must be >= 1")

        seeds = doc.get("seeds")
        if seeds is not None and (not isinstance(seeds, list) or not seeds
                                  or not all(isinstance(s, int) for s in seeds)):
            raise ConfigError("seeds", "must be a non-empty list of integers")
        formats = doc.get("formats", list(FORMATS))
        if not isinstance(formats, list) or any(f not in FORMATS for f in formats):
            raise ConfigError("formats", f"must be a list drawn from {list(FORMATS)}")
        pool = doc.get("cloud_pool_size")
        if pool is not None and (not isinstance(pool, int) or isinstance(pool, bool)):
            raise ConfigError("cloud_pool_size", "must be an integer or null")
        return cls(
            profiles=profiles, workload=workload, policy=policy, policy_params=params,
            network=network, durations=durations,
            seed=_int(doc, "seed", 0, None), seeds=seeds, edges=_int(doc, "edges", 1, None),
            safety_margin=_num(doc, "safety_margin_ms", 50.0, None), adaptive=adaptive,
            cloud_pool_size=pool, name=str(doc.get("name", "experiment")),
            output_dir=str(doc.get("output_dir", "out")), formats=formats,
        )


def _section(doc, key, allowed):
    sec = doc.get(key) or {}
    if not isinstance(sec, Mapping):
        raise ConfigError(key, "must be an object")
    bad = set(sec) - allowed
    if bad:
        raise ConfigError(f"{key}.{sorted(bad)[0]}", "unknown key")
    return sec


def _qualify(prefix, key):
    return f"{prefix}.{key}" if prefix else key


def _int(doc, key, default, prefix):
    v = doc.get(key, default)
    if not isinstance(v, int) or isinstance(v, bool):
        raise ConfigError(_qualify(prefix, key), "must be an integer")
    return v


def _num(doc, key, default, prefix):
    v = doc.get(key, default)
    if not isinstance(v, (int, float)) or isinstance(v, bool):
        raise ConfigError(_qualify(prefix, key), "must be a number")
    return float(v)


def _parse_profiles(spec, qoe, path_of) -> ProfileTable:
    rate = qoe.get("rate", 0.9)
    window = qoe.get("window_ms", 20_000)
    if isinstance(spec, str):
        key = spec.lower()
        if key == "table1":
            return table1_profiles()
        if key in ("wl1", "wl2"):
            if not isinstance(rate, (int, float)) or not 0 < rate <= 1:
                raise ConfigError("qoe.rate", "must satisfy 0 < rate <= 1")
            if not isinstance(window, (int, float)) or window <= 0:
                raise ConfigError("qoe.window_ms", "must be > 0")
            return gems_profiles(key, float(rate), float(window))
        p = Path(path_of(spec))
        try:
            with open(p, encoding="utf-8") as f:
                return profiles_from_dict(json.load(f))
        except OSError as e:
            raise ConfigError("profiles", f"{p}: {e.strerror}") from None
        except json.JSONDecodeError as e:
            raise ConfigError("profiles", f"{p}: invalid JSON ({e.msg})") from None
    return profiles_from_dict(spec)


def load_config(path) -> ExperimentConfig:
    path = Path(path)
    try:
        with open(path, encoding="utf-8") as f:
            doc = json.load(f)
    except OSError as e:
        raise ConfigError("<file>", f"{path}: {e.strerror}") from None
    except json.JSONDecodeError as e:
        raise ConfigError("<file>", f"{path}: invalid JSON at line {e.lineno} ({e.msg})") from None
    return ExperimentConfig.from_dict(doc, base_dir=path.parent)
