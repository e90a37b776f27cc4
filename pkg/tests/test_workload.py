import csv

import pytest

from edgesched.errors import ConfigError
from edgesched.model import table1_profiles
from edgesched.workload import WorkloadSpec, export_csv, generate

PROFILES = table1_profiles()


@pytest.mark.parametrize("drones,models,count", [
    (2, "passive", 2400), (3, "passive", 3600), (4, "passive", 4800),
    (2, "active", 3600), (3, "active", 5400), (4, "active", 7200),
])
def test_cardinalities(drones, models, count):
    spec = WorkloadSpec(drones=drones, model_set=models)
    tasks = generate(spec, PROFILES)
    assert len(tasks) == count == spec.expected_count
    per_model = {m: sum(t.model_id == m for t in tasks) for m in spec.models}
    assert len(set(per_model.values())) == 1


def test_single_model_custom_set():
    tasks = generate(WorkloadSpec(drones=1, model_set=("HV",), duration=10_000), PROFILES)
    assert [t.arrival_ts for t in tasks] == [i * 1000.0 for i in range(10)]


def test_same_seed_identical_and_sorted():
    spec = WorkloadSpec(drones=3, model_set="active", seed=4)
    a, b = generate(spec, PROFILES), generate(spec, PROFILES)
    assert [(t.model_id, t.drone_id, t.arrival_ts) for t in a] == \
        [(t.model_id, t.drone_id, t.arrival_ts) for t in b]
    assert [t.arrival_ts for t in a] == sorted(t.arrival_ts for t in a)


def test_other_seed_permutes_only_within_ticks():
    a = generate(WorkloadSpec(drones=3, model_set="active", seed=1), PROFILES)
    b = generate(WorkloadSpec(drones=3, model_set="active", seed=2), PROFILES)
    assert [(t.model_id, t.drone_id) for t in a] != [(t.model_id, t.drone_id) for t in b]
    tick = lambda ts: sorted((t.model_id, t.drone_id) for t in ts)  # noqa: E731
    for k in range(0, 5400, 18):
        assert tick(a[k:k + 18]) == tick(b[k:k + 18])


def test_validation():
    with pytest.raises(ConfigError, match="drones"):
        WorkloadSpec(drones=0)
    with pytest.raises(ConfigError, match="model_set"):
        WorkloadSpec(model_set="bogus")
    with pytest.raises(ConfigError, match="unknown model"):
        generate(WorkloadSpec(model_set=("HV", "ZZ")), PROFILES)


def test_labels():
    assert WorkloadSpec(drones=4, model_set="active").label == "4D-A"
    assert WorkloadSpec(drones=2).label == "2D-P"


def test_export_csv(tmp_path):
    tasks = generate(WorkloadSpec(drones=1, model_set=("HV", "MD"), duration=2000), PROFILES)
    p = tmp_path / "w.csv"
    export_csv(tasks, p)
    rows = list(csv.reader(p.open()))
    assert rows[0] == ["task_id", "model_id", "arrival_ms", "drone_id"]
    assert len(rows) == 5 and rows[-1][2] == "1000"
