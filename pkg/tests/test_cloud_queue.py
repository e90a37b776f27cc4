import pytest

from edgesched.cloud_queue import CloudAction, CloudAdmission, CloudQueue
from edgesched.edge_queue import EdgeQueue
from edgesched.model import Task, table1_profiles

PROFILES = table1_profiles()


def task(i, model, arrival=0.0):
    return Task(i, model, arrival, PROFILES[model].deadline)


def test_deferred_trigger_for_positive_task():
    q = CloudQueue(PROFILES, safety_margin=50)
    assert q.admit(task(1, "HV"), 0.0) == 202.0
    assert q.entries()[0][2] is False


def test_deferred_trigger_for_negative_task():
    q = CloudQueue(PROFILES)
    assert q.admit(task(1, "BP"), 0.0) == 656.0
    assert q.entries()[0][2] is True


def test_ec_drops_negative_and_dispatches_now():
    q = CloudQueue(PROFILES, admission=CloudAdmission.EC)
    assert q.admit(task(1, "BP"), 0.0) is None
    assert q.admit(task(2, "HV"), 10.0) == 10.0


def test_any_sign_accepts_negative():
    q = CloudQueue(PROFILES, admission=CloudAdmission.ANY_SIGN)
    assert q.admit(task(1, "BP"), 0.0) == 0.0


def test_infeasible_rejected_under_every_rule():
    for rule in CloudAdmission:
        q = CloudQueue(PROFILES, admission=rule)
        assert q.admit(task(1, "HV"), 300.0) is None  # 300 + 398 > 650


def test_adapted_estimate_used_for_admission():
    est = {"HV": 600.0}
    q = CloudQueue(PROFILES, estimate=lambda m: est.get(m, PROFILES[m].cloud_duration_expected_static))
    assert q.admit(task(1, "HV"), 0.0) == 0.0       # max(now, 650 - 600 - 50)
    assert q.admit(task(2, "HV"), 100.0) is None


def test_pop_due_dispatch_and_jit():
    q = CloudQueue(PROFILES)
    assert q.pop_due(10_000.0) == []
    hv, bp = task(1, "HV"), task(2, "BP")
    q.admit(hv, 0.0)
    q.admit(bp, 0.0)
    assert q.pop_due(201.0) == []
    assert q.pop_due(202.0) == [(hv, CloudAction.DISPATCH)]
    assert q.pop_due(656.0) == [(bp, CloudAction.JIT_DROP)]
    assert len(q) == 0


def test_pop_due_jit_drops_when_estimate_grew():
    est = {"HV": 398.0}
    q = CloudQueue(PROFILES, estimate=lambda m: est[m])
    hv = task(1, "HV")
    q.admit(hv, 0.0)
    est["HV"] = 500.0
    assert q.pop_due(202.0) == [(hv, CloudAction.JIT_DROP)]


def test_select_steal_prefers_negative_utility():
    q = CloudQueue(PROFILES)
    hv, bp = task(1, "HV"), task(2, "BP")
    q.admit(hv, 0.0)
    q.admit(bp, 0.0)
    stolen = q.select_steal(300.0, 0.0, EdgeQueue(PROFILES))
    assert stolen is bp
    assert [e[1] for e in q.entries()] == [hv]


def test_select_steal_respects_slack_and_queue():
    q = CloudQueue(PROFILES)
    q.admit(task(1, "BP"), 0.0)
    assert q.select_steal(200.0, 0.0, EdgeQueue(PROFILES)) is None  # 244 > 200
    edge = EdgeQueue(PROFILES)
    hv = task(5, "HV")
    hv.sched_deadline_ts = 300.0
    edge.insert(hv)
    # Running BP first would push HV to 418 > 300.
    assert q.select_steal(10_000.0, 0.0, edge) is None
    assert len(q) == 1


def test_pinned_entries_are_not_stolen():
    q = CloudQueue(PROFILES)
    hv = task(1, "HV")
    q.push(hv, 0.0, stealable=False)
    assert q.select_steal(10_000.0, 0.0, EdgeQueue(PROFILES)) is None
    assert q.pop_due(0.0) == [(hv, CloudAction.DISPATCH)]


def test_select_steal_rank_order_among_positive():
    q = CloudQueue(PROFILES)
    hv, dev = task(1, "HV"), task(2, "DEV")
    q.admit(dev, 0.0)
    q.admit(hv, 0.0)
    # DEV rank 25/172 is above HV rank 24/174.
    assert q.select_steal(1000.0, 0.0, EdgeQueue(PROFILES)) is dev


def test_stolen_entry_never_dispatches():
    q = CloudQueue(PROFILES)
    hv = task(1, "HV")
    q.admit(hv, 0.0)
    assert q.select_steal(1000.0, 0.0, EdgeQueue(PROFILES)) is hv
    assert q.pop_due(1e9) == []
    assert q.next_trigger() is None


@pytest.mark.parametrize("model", sorted(PROFILES))
def test_trigger_leaves_room_for_expected_duration(model):
    q = CloudQueue(PROFILES)
    t = task(1, model)
    trig = q.admit(t, 0.0)
    p = PROFILES[model]
    if p.cloud_utility >= 0 and trig is not None:
        assert trig + p.cloud_duration_expected_static + 50 <= t.deadline_ts + 1e-9
