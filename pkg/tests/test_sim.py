import json

import pytest

from dagrepl.checks import check_convergence, check_safety
from dagrepl.sim import ConfigError, Partition, Scenario, Trace, run
from dagrepl.scenarios import FIG1_BFS_ORDER, FIG1_FAIR_ORDER, \
    fig1_scenario, random_scenario


def _final_histories(trace):
    finals = {}
    for ev in trace.events:
        if ev["kind"] == "history":
            finals[ev["replica"]] = [tuple(u) for u in ev["h"]]
    return finals


def test_single_replica_degenerate():
    sc = Scenario(n=1, datatype="intlog", recon="bfs",
                  workload=[(1, 1, ("push", 1)), (2, 1, ("push", 2))])
    trace = run(sc)
    finals = _final_histories(trace)
    assert finals == {1: [(1, 1), (1, 2)]}
    assert trace.meta["quiescent"]


def test_determinism_same_seed():
    sc = random_scenario(3, "bfs")
    a, b = run(sc), run(sc)
    assert a.meta == b.meta
    assert a.events == b.events


def test_different_seed_differs():
    a = run(random_scenario(1, "bfs"))
    b = run(random_scenario(2, "bfs"))
    assert a.events != b.events


def test_fig1_scripted_deliveries():
    for recon, order in (("bfs", FIG1_BFS_ORDER), ("fair", FIG1_FAIR_ORDER)):
        trace = run(fig1_scenario(recon))
        finals = _final_histories(trace)
        assert set(finals) == {1, 2, 3}
        for hist in finals.values():
            assert hist == order


def test_append_bottom_recorded():
    sc = Scenario(n=1, datatype="nfs", recon="bfs",
                  workload=[(1, 1, ("rmdir", "/nope"))])
    trace = run(sc)
    kinds = [ev["kind"] for ev in trace.events]
    assert "append_bottom" in kinds and "append" not in kinds


def test_crashed_replica_stops_appending():
    sc = Scenario(n=2, datatype="intlog", recon="bfs",
                  workload=[(1, 1, ("push", 1)), (50, 1, ("push", 2))],
                  crashes=[(1, 10)], seed=3)
    trace = run(sc)
    appends = [ev for ev in trace.events if ev["kind"] == "append"]
    assert [ev["seq"] for ev in appends] == [1]
    assert trace.meta["crashed"] == [1]


def test_partition_defers_but_delivers():
    sc = Scenario(n=2, datatype="intlog", recon="bfs",
                  workload=[(1, 1, ("push", 1))],
                  partitions=[Partition([(1, 2)], 0, 500)],
                  seed=4)
    trace = run(sc)
    assert check_convergence(trace)["ok"]
    delivers = [ev for ev in trace.events if ev["kind"] == "deliver"]
    assert delivers and delivers[0]["replica"] == 2
    sends = [ev for ev in trace.events
             if ev["kind"] == "send" and ev["dst"] == 2]
    assert all(ev["deliver_at"] >= 500 for ev in sends)


def test_horizon_truncates_and_marks_nonquiescent():
    sc = random_scenario(5, "bfs")
    sc.horizon = 10
    trace = run(sc)
    assert not trace.meta["quiescent"]


def test_config_errors():
    with pytest.raises(ConfigError):
        run(Scenario(n=0, datatype="intlog", recon="bfs", workload=[]))
    with pytest.raises(ConfigError):
        run(Scenario(n=2, datatype="intlog", recon="bfs",
                     workload=[(1, 3, ("push", 1))]))
    with pytest.raises(ConfigError):
        run(Scenario(n=2, datatype="intlog", recon="bfs",
                     workload=[(-1, 1, ("push", 1))]))
    with pytest.raises(ConfigError):
        run(Scenario(n=2, datatype="intlog", recon="bfs", workload=[],
                     partitions=[Partition([(1, 2)], 5, 5)]))
    with pytest.raises(ConfigError):
        run(Scenario(n=2, datatype="intlog", recon="bfs", workload=[],
                     snapshot_every=0))
    with pytest.raises(KeyError):
        run(Scenario(n=2, datatype="intlog", recon="bogus", workload=[]))


def test_scenario_json_roundtrip(tmp_path):
    sc = random_scenario(7, "fair")
    path = tmp_path / "sc.json"
    sc.save(path)
    again = Scenario.load(path)
    assert again == sc
    assert run(again).events == run(sc).events


def test_scenario_from_dict_rejects_garbage():
    with pytest.raises(ConfigError):
        Scenario.from_dict({"n": 2})


def test_trace_jsonl_roundtrip(tmp_path):
    trace = run(fig1_scenario("bfs"))
    path = tmp_path / "t.jsonl"
    trace.to_jsonl(path)
    again = Trace.from_jsonl(path)
    assert again.meta == trace.meta
    assert again.events == trace.events
    with open(path) as fh:
        first = json.loads(fh.readline())
    assert first["schema"] == 1


def test_trace_from_jsonl_rejects_non_trace(tmp_path):
    path = tmp_path / "junk.jsonl"
    path.write_text('{"nope": 1}\n')
    with pytest.raises(ConfigError):
        Trace.from_jsonl(path)


def test_trace_steps_strictly_increase():
    trace = run(random_scenario(9, "fair"))
    steps = [ev["t"] for ev in trace.events]
    assert steps == sorted(steps) and len(set(steps)) == len(steps)


def test_random_scenario_with_faults_converges_and_safe():
    trace = run(random_scenario(11, "fair"))
    assert check_convergence(trace)["ok"]
    assert check_safety(trace, sample=10)["ok"]
