"""Deadline-driven scheduling of DNN inference tasks across an edge accelerator and a cloud."""

from .config import ExperimentConfig, load_config
from .errors import AuditError, ConfigError
from .model import (Disposition, ModelProfile, Task, TaskOutcome, WindowState, migration_score,
                    qoe_window_utility, qos_utility, steal_rank, table1_profiles)
from .policies import PolicyId, make_policy
from .report import MetricsReport
from .sim import EdgeSim, run
from .workload import WorkloadSpec, generate

__version__ = "0.1.0"

__all__ = [
    "AuditError", "ConfigError", "Disposition", "EdgeSim", "ExperimentConfig", "MetricsReport",
    "ModelProfile", "PolicyId", "Task", "TaskOutcome", "WindowState", "WorkloadSpec", "generate",
    "load_config", "make_policy", "migration_score", "qoe_window_utility", "qos_utility", "run",
    "steal_rank", "table1_profiles",
]
