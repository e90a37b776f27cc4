"""Metrics aggregation, emit-time audits and report writers."""

from __future__ import annotations

import csv
import io
import json
import statistics
from dataclasses import dataclass, field
from pathlib import Path
from typing import Dict, List, Mapping, Optional, Sequence

from .errors import AuditError, ConfigError
from .model import Disposition, TaskOutcome

COUNT_KEYS = ("generated", "edge_on_time", "edge_missed", "cloud_on_time", "cloud_missed",
              "dropped", "stolen_count", "gems_rescheduled_count", "migration_count")
OUTCOME_COLUMNS = ("edge_id", "task_id", "model_id", "drone_id", "disposition", "qos_utility",
                   "arrival_ms", "deadline_ms", "finalized_ms", "start_ms", "finish_ms",
                   "actual_duration_ms", "stolen", "gems_rescheduled", "migrated")
WINDOW_COLUMNS = ("edge_id", "model_id", "window_start_ms", "window_end_ms", "total", "success",
                  "rate", "qoe_utility")
TIMELINE_COLUMNS = ("edge_id", "model_id", "task_id", "dispatch_ms", "observed_cloud_ms",
                    "expected_cloud_ms", "added_latency_ms", "met_deadline")

_DISPOSITION_KEY = {
    Disposition.EDGE_ON_TIME: "edge_on_time", Disposition.EDGE_MISSED: "edge_missed",
    Disposition.CLOUD_ON_TIME: "cloud_on_time", Disposition.CLOUD_MISSED: "cloud_missed",
    Disposition.DROPPED: "dropped",
}


def _blank_counts() -> Dict[str, float]:
    d = {k: 0 for k in COUNT_KEYS}
    d.update(qos_edge=0, qos_cloud=0)
    return d


def _fmt(v) -> str:
    if v is None:
        return ""
    if isinstance(v, bool):
        return "1" if v else "0"
    if isinstance(v, float):
        return repr(round(v, 6))
    return str(v)


@dataclass
class MetricsReport:
    """Everything one experiment produced, for all of its edges."""

    config: dict
    per_model: Dict[str, Dict[str, float]]
    aggregate: Dict[str, float]
    per_edge: List[Dict[str, float]]
    outcomes: List[TaskOutcome] = field(repr=False, default_factory=list)
    windows: List[dict] = field(repr=False, default_factory=list)
    timeline: List[dict] = field(repr=False, default_factory=list)

    @property
    def total_utility(self) -> int:
        return self.aggregate["total"]

    @property
    def qos_utility(self) -> int:
        return self.aggregate["qos_edge"] + self.aggregate["qos_cloud"]

    @property
    def qoe_utility(self) -> int:
        return self.aggregate["qoe_total"]

    @property
    def completion_pct(self) -> float:
        return self.aggregate["completion_pct"]

    def to_dict(self) -> dict:
        return {
            "config": self.config,
            "aggregate": self.aggregate,
            "per_model": self.per_model,
            "per_edge": self.per_edge,
            "windows": [dict(w) for w in self.windows],
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True, indent=2) + "\n"

    def audit(self) -> None:
        """Raise AuditError unless counts conserve and totals match the outcome log."""
        audit_report(self)

    # -- writers -------------------------------------------------------

    def outcomes_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(OUTCOME_COLUMNS)
        for o in self.outcomes:
            w.writerow([_fmt(v) for v in (
                o.edge_id, o.task_id, o.model_id, o.drone_id, o.disposition.value, o.qos_utility,
                o.arrival_ts, o.deadline_ts, o.finalized_ts, o.start_ts, o.finish_ts,
                o.actual_duration, o.stolen, o.gems_rescheduled, o.migrated)])
        return buf.getvalue()

    def windows_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(WINDOW_COLUMNS)
        for r in self.windows:
            w.writerow([_fmt(r[k]) for k in ("edge_id", "model_id", "window_start",
                                             "window_end", "total", "success", "rate",
                                             "qoe_utility")])
        return buf.getvalue()

    def timeline_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(TIMELINE_COLUMNS)
        for r in self.timeline:
            w.writerow([_fmt(r[k]) for k in ("edge_id", "model_id", "task_id", "dispatch_ts",
                                             "observed_cloud_ms", "expected_cloud_ms",
                                             "added_latency_ms", "met_deadline")])
        return buf.getvalue()

    def summary(self) -> str:
        """Fixed-width per-model table plus the aggregate line."""
        cols = ("generated", "edge_on_time", "cloud_on_time", "edge_missed", "cloud_missed",
                "dropped", "stolen_count", "migration_count", "qos_edge", "qos_cloud",
                "qoe_total", "total")
        heads = ("model", "gen", "e_ok", "c_ok", "e_miss", "c_miss", "drop", "stolen", "migr",
                 "qos_e", "qos_c", "qoe", "total")
        lines = [f"{self.config.get('name', '')}: policy={self.config['policy']['name']} "
                 f"workload={self.config.get('workload_label', '')} "
                 f"seed={self.config['seed']} edges={self.config['edges']}"]
        if self.config["policy"]["name"] == "SOTA1":
            lines.append("SOTA1 urgency threshold: "
                         f"{self.config['policy']['params']['urgency_threshold_ms']:g} ms")
        lines.append(" ".join(f"{h:>8}" for h in heads))
        rows = sorted(self.per_model.items()) + [("ALL", self.aggregate)]
        for name, m in rows:
            lines.append(" ".join([f"{name:>8}"] + [f"{m[c]:>8}" for c in cols]))
        a = self.aggregate
        lines.append(f"completion {100 * a['completion_pct']:.2f}%  "
                     f"edge utilization {100 * a['edge_utilization']:.2f}%")
        return "\n".join(lines) + "\n"

    def write(self, out_dir, formats: Sequence[str] = ("json", "csv", "summary")) -> List[Path]:
        out = Path(out_dir)
        try:
            out.mkdir(parents=True, exist_ok=True)
        except OSError as e:
            raise OSError(f"{out}: {e.strerror}") from None
        files = []
        if "json" in formats:
            files.append(("report.json", self.to_json()))
        if "csv" in formats:
            files += [("outcomes.csv", self.outcomes_csv()), ("windows.csv", self.windows_csv()),
                      ("timeline.csv", self.timeline_csv())]
        if "summary" in formats:
            files.append(("summary.txt", self.summary()))
        written = []
        for name, text in files:
            p = out / name
            try:
                with open(p, "w", encoding="utf-8", newline="\n") as f:
                    f.write(text)
            except OSError as e:
                raise OSError(f"{p}: {e.strerror}") from None
            written.append(p)
        return written


def _tally(outcomes, generated_by_model) -> Dict[str, Dict[str, float]]:
    per_model = {m: _blank_counts() for m in sorted(generated_by_model)}
    for m, n in generated_by_model.items():
        per_model[m]["generated"] = n
    for o in outcomes:
        row = per_model[o.model_id]
        row[_DISPOSITION_KEY[o.disposition]] += 1
        if o.disposition.on_edge:
            row["qos_edge"] += o.qos_utility
        elif o.disposition.on_cloud:
            row["qos_cloud"] += o.qos_utility
        row["stolen_count"] += o.stolen
        row["gems_rescheduled_count"] += o.gems_rescheduled
        row["migration_count"] += o.migrated
    return per_model


def _finish_row(row: Dict[str, float], qoe: int) -> None:
    row["qoe_total"] = qoe
    row["total"] = row["qos_edge"] + row["qos_cloud"] + qoe
    on_time = row["edge_on_time"] + row["cloud_on_time"]
    row["on_time"] = on_time
    row["missed"] = row["edge_missed"] + row["cloud_missed"]
    row["completion_pct"] = on_time / row["generated"] if row["generated"] else 0.0


def build_report(config, sims) -> MetricsReport:
    """Aggregate finished EdgeSim instances into one report."""
    outcomes: List[TaskOutcome] = []
    windows: List[dict] = []
    timeline: List[dict] = []
    generated: Dict[str, int] = {}
    per_edge = []
    busy = span = 0.0
    for sim in sims:
        edge_outcomes = [sim.outcomes[t.task_id] for t in sim.tasks]
        outcomes += edge_outcomes
        for t in sim.tasks:
            generated[t.model_id] = generated.get(t.model_id, 0) + 1
        for w in sim.qoe.closed:
            windows.append(dict(w, edge_id=sim.edge_id))
        for r in sim.timeline:
            timeline.append(dict(r, edge_id=sim.edge_id))
        edge_gen = {}
        for t in sim.tasks:
            edge_gen[t.model_id] = edge_gen.get(t.model_id, 0) + 1
        edge_rows = _tally(edge_outcomes, edge_gen)
        edge = _blank_counts()
        for row in edge_rows.values():
            for k in edge:
                edge[k] += row[k]
        _finish_row(edge, sim.qoe.total_qoe_utility)
        edge_span = max(sim.horizon, sim.last_event_ts)
        edge["edge_utilization"] = sim.edge_busy_time / edge_span if edge_span else 0.0
        edge["edge_id"] = sim.edge_id
        per_edge.append(edge)
        busy += sim.edge_busy_time
        span += edge_span

    per_model = _tally(outcomes, generated)
    qoe_by_model: Dict[str, int] = {}
    for w in windows:
        qoe_by_model[w["model_id"]] = qoe_by_model.get(w["model_id"], 0) + w["qoe_utility"]
    for m, row in per_model.items():
        _finish_row(row, qoe_by_model.get(m, 0))
    aggregate = _blank_counts()
    for row in per_model.values():
        for k in aggregate:
            aggregate[k] += row[k]
    _finish_row(aggregate, sum(s.qoe.total_qoe_utility for s in sims))
    aggregate["edge_utilization"] = busy / span if span else 0.0

    cfg = config.to_dict()
    cfg["workload_label"] = config.workload.label
    report = MetricsReport(cfg, per_model, aggregate, per_edge, outcomes, windows, timeline)
    report.audit()
    return report


def audit_report(report: MetricsReport) -> None:
    """Conservation per model and overall, plus a recomputation from the outcome log."""
    def conserve(name, row):
        lhs = row["generated"]
        rhs = row["on_time"] + row["missed"] + row["dropped"]
        if lhs != rhs:
            raise AuditError(f"{name}: generated {lhs} != on_time+missed+dropped {rhs}")

    for m, row in report.per_model.items():
        conserve(m, row)
    conserve("aggregate", report.aggregate)
    ids = [(o.edge_id, o.task_id) for o in report.outcomes]
    if len(set(ids)) != len(ids):
        raise AuditError("a task was finalized more than once")
    if len(ids) != report.aggregate["generated"]:
        raise AuditError("outcome log length differs from generated count")
    qos_edge = sum(o.qos_utility for o in report.outcomes if o.disposition.on_edge)
    qos_cloud = sum(o.qos_utility for o in report.outcomes if o.disposition.on_cloud)
    if (qos_edge, qos_cloud) != (report.aggregate["qos_edge"], report.aggregate["qos_cloud"]):
        raise AuditError("QoS totals differ from the outcome log")
    if any(o.disposition is Disposition.DROPPED and o.qos_utility != 0 for o in report.outcomes):
        raise AuditError("a dropped task carries utility")
    qoe = sum(w["qoe_utility"] for w in report.windows)
    if qoe != report.aggregate["qoe_total"]:
        raise AuditError("QoE total differs from the window log")


def audit_outcomes_csv(report: MetricsReport, text: str) -> None:
    """Check report totals against a re-read ``outcomes.csv``."""
    edge = cloud = n = 0
    for row in csv.DictReader(io.StringIO(text)):
        n += 1
        d = Disposition(row["disposition"])
        if d.on_edge:
            edge += int(row["qos_utility"])
        elif d.on_cloud:
            cloud += int(row["qos_utility"])
    a = report.aggregate
    if (n, edge, cloud) != (a["generated"], a["qos_edge"], a["qos_cloud"]):
        raise AuditError("outcomes.csv does not reproduce report totals")


# -- sweeps ------------------------------------------------------------

SWEEP_COLUMNS = ("policy", "workload", "seeds", "completed_mean", "completed_min",
                 "completed_max", "completion_pct_mean", "utility_mean", "utility_min",
                 "utility_max", "pareto")


def sweep_table(results: Mapping[str, Sequence[MetricsReport]]) -> List[dict]:
    """One row per policy: on-time tasks and total utility over seeds, plus Pareto flag.

    A row is Pareto-optimal when no other row has both more tasks
    completed and more utility (mean over seeds).
    """
    if len(results) < 2:
        raise ConfigError("sweep", "needs at least two configurations")
    labels = {reps[0].config["workload_label"] for reps in results.values()}
    workloads = {json.dumps(reps[0].config["workload"], sort_keys=True)
                 for reps in results.values()}
    if len(labels) != 1 or len(workloads) != 1:
        raise ConfigError("workload", "sweep configurations must share one workload")
    rows = []
    for policy, reps in results.items():
        done = [r.aggregate["on_time"] for r in reps]
        util = [r.aggregate["total"] for r in reps]
        rows.append({
            "policy": policy, "workload": next(iter(labels)), "seeds": len(reps),
            "completed_mean": statistics.fmean(done), "completed_min": min(done),
            "completed_max": max(done),
            "completion_pct_mean": statistics.fmean(r.aggregate["completion_pct"] for r in reps),
            "utility_mean": statistics.fmean(util), "utility_min": min(util),
            "utility_max": max(util),
        })
    for r in rows:
        r["pareto"] = not any(
            o is not r and o["completed_mean"] >= r["completed_mean"]
            and o["utility_mean"] >= r["utility_mean"]
            and (o["completed_mean"], o["utility_mean"]) != (r["completed_mean"], r["utility_mean"])
            for o in rows)
    return rows


def sweep_csv(rows: Sequence[dict]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(SWEEP_COLUMNS)
    for r in rows:
        w.writerow([_fmt(r[c]) for c in SWEEP_COLUMNS])
    return buf.getvalue()


def sweep_summary(rows: Sequence[dict]) -> str:
    lines = [f"{'policy':>8} {'done':>10} {'[min,max]':>15} {'utility':>12} {'[min,max]':>21} pareto"]
    for r in rows:
        lines.append(
            f"{r['policy']:>8} {r['completed_mean']:>10.1f} "
            f"[{r['completed_min']:>6},{r['completed_max']:>6}] {r['utility_mean']:>12.1f} "
            f"[{r['utility_min']:>9},{r['utility_max']:>9}] {'*' if r['pareto'] else ''}")
    return "\n".join(lines) + "\n"
