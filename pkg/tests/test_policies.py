import pytest

from edgesched.errors import ConfigError
from edgesched.model import Disposition, Task, table1_profiles
from edgesched.policies import Decision, PolicyId, make_policy, parse_policy_id
from edgesched.sim import EdgeSim
from edgesched.workload import WorkloadSpec, generate

PROFILES = table1_profiles()


def idle_sim(name, tasks=()):
    return EdgeSim(PROFILES, make_policy(name), list(tasks))


def test_dems_sends_feasible_task_to_idle_edge():
    sim = idle_sim("DEMS")
    t = Task(1, "HV", 0.0, 650)
    assert sim.policy.dispatch(t, 0.0, sim).decision is Decision.TO_EDGE
    assert sim.edge_queue.tasks() == [t]


def test_cloud_only_drops_negative_cloud_models():
    sim = idle_sim("CLD", [Task(1, "BP", 0.0, 900), Task(2, "HV", 0.0, 650)]).run()
    assert sim.outcomes[1].disposition is Disposition.DROPPED
    assert sim.outcomes[2].disposition is Disposition.CLOUD_ON_TIME


def test_sota1_buffer_admits_non_urgent_task():
    sim = idle_sim("SOTA1")
    sim.busy_until = 750.0  # MD would finish at 892: late for 850, fine for 935
    t = Task(1, "MD", 0.0, 850)
    r = sim.policy.dispatch(t, 0.0, sim)
    assert r.decision is Decision.TO_EDGE and r.buffered
    assert t.sched_deadline_ts == pytest.approx(935) and t.deadline_ts == 850


def test_sota1_urgent_task_gets_no_buffer():
    sim = idle_sim("SOTA1")
    sim.busy_until = 600.0
    t = Task(1, "HV", 0.0, 650)  # deadline below the urgency threshold
    assert sim.policy.dispatch(t, 0.0, sim).decision is Decision.TO_CLOUD
    assert t.sched_deadline_ts == 650


def test_sota2_act_running_mean():
    p = make_policy("SOTA2")
    assert p.act is None
    assert [p.act_update(x) for x in (100, 200)] == [100, 150]
    q = make_policy("SOTA2")
    for x in (174, 172, 142):
        q.act_update(x)
    assert q.act == pytest.approx(162.67, abs=0.01)


@pytest.mark.parametrize("name", ["EO_EDF", "EO_HPF"])
def test_edge_only_never_uses_cloud(name):
    tasks = generate(WorkloadSpec(drones=2, duration=20_000), PROFILES)
    sim = idle_sim(name, tasks).run()
    assert sim.cloud_queue is None
    assert all(not o.disposition.value.startswith("Cloud") for o in sim.outcomes.values())


def test_cloud_only_never_uses_edge():
    tasks = generate(WorkloadSpec(drones=2, duration=20_000), PROFILES)
    sim = idle_sim("CLD", tasks).run()
    assert sim.edge_queue is None and sim.edge_busy_time == 0
    assert all(not o.disposition.value.startswith("Edge") for o in sim.outcomes.values())


def test_mechanism_flags():
    dem, dems, dems_a, gems = (make_policy(n) for n in ("DEM", "DEMS", "DEMS-A", "GEMS"))
    assert not dem.stealing and dems.stealing
    assert dems_a.adaptive and not dems.adaptive and not gems.adaptive
    assert gems.qoe_reschedule and not dems.qoe_reschedule
    assert make_policy("GEMS", {"adaptive": True}).adaptive


@pytest.mark.parametrize("alias,pid", [
    ("E+C", PolicyId.EPC_EDF), ("dems-a", PolicyId.DEMS_A), ("sjf(e+c)", PolicyId.EPC_SJF),
    ("HPF", PolicyId.EO_HPF), ("gems", PolicyId.GEMS),
])
def test_aliases(alias, pid):
    assert parse_policy_id(alias) is pid


def test_unknown_policy_and_param():
    with pytest.raises(ConfigError, match="unknown policy"):
        parse_policy_id("FIFO")
    with pytest.raises(ConfigError, match="unknown policy parameter"):
        make_policy("SOTA1", {"bogus": 1})
