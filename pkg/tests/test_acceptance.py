"""Acceptance suite: one test per criterion, each printing a PASS/FAIL line.

The lines are printed as each test finishes and again in the pytest
terminal summary. Run directly (``python tests/test_acceptance.py``) to get
only the ten lines.
"""

import random
import statistics
import sys
import time
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent))

from oracle import optimum_utility  # noqa: E402
from scenarios import migration_scenario, run_stealing_scenario, schedule_actions  # noqa: E402

from edgesched.config import DurationSpec, ExperimentConfig, NetworkSpec  # noqa: E402
from edgesched.edge_queue import InsertAction  # noqa: E402
from edgesched.model import (Disposition, Task, gems_profiles, qos_utility,  # noqa: E402
                             table1_profiles)
from edgesched.network import DurationMode, NetworkMode  # noqa: E402
from edgesched.policies import make_policy  # noqa: E402
from edgesched.sim import EdgeSim, run  # noqa: E402
from edgesched.workload import WorkloadSpec, generate  # noqa: E402

RESULTS = {}

EDGE_UTILITY = {"HV": 124, "DEV": 99, "MD": 74, "BP": 38, "CD": 171, "DEO": 244}
CLOUD_UTILITY = {"HV": 100, "DEV": 74, "MD": 50, "BP": -3, "CD": 23, "DEO": 40}
LOGNORMAL = DurationSpec(DurationMode.LOGNORMAL)


def record(number, ok, detail):
    line = f"criterion {number:>2}: {'PASS' if ok else 'FAIL'}  {detail}"
    RESULTS[number] = line
    print(line)
    assert ok, line


def cfg(policy, drones=4, models="passive", seed=0, **kw):
    return ExperimentConfig(workload=WorkloadSpec(drones=drones, model_set=models),
                            policy=policy, seed=seed, **kw)


def test_c01_utility_goldens():
    profiles = table1_profiles()
    got_e = {m: qos_utility(p, Disposition.EDGE_ON_TIME) for m, p in profiles.items()}
    got_c = {m: qos_utility(p, Disposition.CLOUD_ON_TIME) for m, p in profiles.items()}
    wrong = [m for m in EDGE_UTILITY if got_e[m] != EDGE_UTILITY[m]]
    wrong += [m + "(cloud)" for m in CLOUD_UTILITY if got_c[m] != CLOUD_UTILITY[m]]
    record(1, not wrong, f"12 golden utilities, mismatches: {wrong or 'none'}")


def test_c02_migration_scenarios():
    expected = {1: (InsertAction.INSERT_EDGE, []),
                2: (InsertAction.INSERT_EDGE_AND_MIGRATE, ["tau3"]),
                3: (InsertAction.REDIRECT_CLOUD, [])}
    got = {}
    for n in (1, 2, 3):
        _, q, cand, tasks = migration_scenario(n)
        d = q.insert_with_migration(cand, 0.0, 0.0, lambda t: False)
        names = {t.task_id: name for name, t in tasks.items()}
        got[n] = (d.action, [names[t.task_id] for t in d.migrate_out])
    detail = ", ".join(f"S{n}={a.value}{m or ''}" for n, (a, m) in got.items())
    record(2, got == expected, detail)


def test_c03_stealing_scenarios():
    sim, tasks = run_stealing_scenario()
    names = {t.task_id: name for name, t in tasks.items()}
    order = [(kind, names[tid]) for _, kind, tid in schedule_actions(sim)
             if kind in ("Steal", "CloudDispatch")]
    want = [("Steal", "tau6"), ("CloudDispatch", "tau5"), ("Steal", "tau7")]
    starts = [names[tid] for _, kind, tid in schedule_actions(sim) if kind == "EdgeStart"]
    ok = order == want and starts == ["tau6", "tau1", "tau2", "tau7", "tau3"]
    record(3, ok, f"order {[f'{k}:{n}' for k, n in order]}, edge starts {starts}")


def test_c04_workload_cardinalities():
    profiles = table1_profiles()
    want = {"2D-P": 2400, "3D-P": 3600, "2D-A": 3600, "3D-A": 5400, "4D-P": 4800, "4D-A": 7200}
    got = {}
    for label in want:
        spec = WorkloadSpec(drones=int(label[0]), model_set="passive" if label[-1] == "P" else "active")
        got[label] = len(generate(spec, profiles))
    record(4, got == want, " ".join(f"{k}={v}" for k, v in got.items()))


def test_c05_policy_dominance():
    t0 = time.perf_counter()
    seeds = range(20)
    lines, ok = [], True
    for models, label in (("passive", "4D-P"), ("active", "4D-A")):
        util = {p: [] for p in ("EPC_EDF", "DEM", "DEMS")}
        dems_completion = []
        for s in seeds:
            for p in util:
                rep = run(cfg(p, models=models, seed=s, durations=LOGNORMAL))
                util[p].append(rep.qos_utility)
                if p == "DEMS":
                    dems_completion.append(rep.completion_pct)
        dems_ge_dem = sum(a >= b for a, b in zip(util["DEMS"], util["DEM"]))
        dem_ge_epc = sum(a >= b for a, b in zip(util["DEM"], util["EPC_EDF"]))
        means = {p: statistics.fmean(v) for p, v in util.items()}
        comp = statistics.fmean(dems_completion)
        ok &= dems_ge_dem >= 16 and dem_ge_epc >= 16 and 0.70 <= comp <= 0.95
        lines.append(f"{label}: DEMS>=DEM {dems_ge_dem}/20, DEM>=E+C {dem_ge_epc}/20, "
                     f"means DEMS {means['DEMS']:.0f} DEM {means['DEM']:.0f} "
                     f"E+C {means['EPC_EDF']:.0f}, DEMS completion {comp:.3f}")
    elapsed = time.perf_counter() - t0
    ok &= elapsed < 60
    record(5, ok, "; ".join(lines) + f"; {elapsed:.1f}s")


def test_c06_adaptation_benefit():
    net = NetworkSpec(NetworkMode.TRAPEZOID)
    gains, miss_ok = [], 0
    misses = []
    for s in range(5):
        base = run(cfg("DEMS", seed=s, durations=LOGNORMAL, network=net))
        adapt = run(cfg("DEMS_A", seed=s, durations=LOGNORMAL, network=net))
        gains.append(adapt.qos_utility / base.qos_utility - 1)
        a, b = adapt.aggregate["cloud_missed"], base.aggregate["cloud_missed"]
        misses.append((a, b))
        miss_ok += a < b
    mean_gain = statistics.fmean(gains)
    ok = mean_gain >= 0.10 and miss_ok == 5
    record(6, ok, f"mean utility gain {100 * mean_gain:.1f}%, cloud misses lower on "
                  f"{miss_ok}/5 seeds (DEMS-A vs DEMS: {misses})")


def test_c07_gems_qoe_benefit():
    profiles = gems_profiles("WL1", 0.9, 20_000)
    work = WorkloadSpec(drones=3, model_set=("HV", "DEV", "MD", "CD"))
    reps = {p: run(ExperimentConfig(profiles=profiles, workload=work, policy=p))
            for p in ("DEMS", "GEMS")}
    q_dems, q_gems = reps["DEMS"].qoe_utility, reps["GEMS"].qoe_utility
    gain = q_gems / q_dems - 1 if q_dems else float("inf")
    t_dems, t_gems = reps["DEMS"].total_utility, reps["GEMS"].total_utility
    ok = gain >= 0.15 and t_gems >= t_dems
    record(7, ok, f"QoE GEMS {q_gems} vs DEMS {q_dems} ({100 * gain:+.1f}%), "
                  f"total GEMS {t_gems} vs DEMS {t_dems}")


def test_c08_conservation_and_determinism(tmp_path):
    bad = []
    small = WorkloadSpec(drones=3, model_set="active", duration=60_000)
    policies = ("CLD", "EO_EDF", "EO_HPF", "EPC_EDF", "EPC_SJF", "SOTA1", "SOTA2",
                "DEM", "DEMS", "DEMS_A")
    for p in policies:
        c = ExperimentConfig(workload=small, policy=p, seed=11, durations=LOGNORMAL,
                             network=NetworkSpec(NetworkMode.TRAPEZOID))
        first, second = run(c), run(c)
        a = first.aggregate
        if a["generated"] != a["on_time"] + a["missed"] + a["dropped"]:
            bad.append(f"{p}:conservation")
        first.write(tmp_path / p / "a")
        second.write(tmp_path / p / "b")
        for name in ("report.json", "outcomes.csv", "timeline.csv", "summary.txt"):
            if (tmp_path / p / "a" / name).read_bytes() != (tmp_path / p / "b" / name).read_bytes():
                bad.append(f"{p}:{name}")
    gems = ExperimentConfig(profiles=gems_profiles("WL1"), policy="GEMS",
                            workload=WorkloadSpec(drones=3, model_set=("HV", "DEV", "MD", "CD"),
                                                  duration=60_000), durations=LOGNORMAL)
    if run(gems).to_json() != run(gems).to_json():
        bad.append("GEMS:report.json")
    record(8, not bad, f"{len(policies) + 1} policies, problems: {bad or 'none'}")


def test_c09_weak_scaling():
    t0 = time.perf_counter()
    pct = {}
    for edges in (7, 28):
        rep = run(cfg("DEMS", drones=3, durations=LOGNORMAL, edges=edges))
        pct[edges] = statistics.fmean(e["completion_pct"] for e in rep.per_edge)
    elapsed = time.perf_counter() - t0
    diff = abs(pct[7] - pct[28]) * 100
    ok = diff < 2 and elapsed < 30
    record(9, ok, f"per-edge completion 7 edges {100 * pct[7]:.2f}%, 28 edges "
                  f"{100 * pct[28]:.2f}% (diff {diff:.2f} pp), {elapsed:.1f}s")


def test_c10_oracle_equivalence():
    profiles = table1_profiles()
    rng = random.Random(7)
    good = over = 0
    worst = 1.0
    for _ in range(200):
        models = rng.sample(sorted(profiles), 2)
        n = rng.randint(1, 8)
        arrivals = sorted(rng.randrange(0, 1500, 10) for _ in range(n))
        spec = [(i, rng.choice(models), a) for i, a in enumerate(arrivals)]
        opt, _ = optimum_utility([Task(i, m, a, profiles[m].deadline) for i, m, a in spec],
                                 profiles)
        tasks = [Task(i, m, a, profiles[m].deadline) for i, m, a in spec]
        sim = EdgeSim(profiles, make_policy("DEMS"), tasks).run()
        got = sum(o.qos_utility for o in sim.outcomes.values())
        ratio = got / opt if opt else (1.0 if got >= 0 else 0.0)
        worst = min(worst, ratio)
        good += ratio >= 0.85
        over += got > opt
    ok = good >= 180 and over == 0
    record(10, ok, f"{good}/200 instances at >= 85% of optimum, {over} above optimum, "
                   f"worst ratio {worst:.3f}")


if __name__ == "__main__":
    sys.exit(pytest.main([__file__, "-q", "-p", "no:cacheprovider"]))
