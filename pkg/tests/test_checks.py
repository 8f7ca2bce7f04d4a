import copy

import pytest

from dagrepl.checks import check_convergence, check_safety, check_stability, \
    fairness_report, run_all_checks, stable_prefix
from dagrepl.sim import Trace, run
from dagrepl.scenarios import STARVATION_VICTIM, continuous_scenario, \
    fig1_scenario, random_scenario, starvation_scenario


def _mutated(trace, fn):
    t = Trace(copy.deepcopy(trace.meta), copy.deepcopy(trace.events))
    fn(t)
    return t


@pytest.fixture(scope="module")
def random_trace():
    return run(random_scenario(21, "fair"))


def test_convergence_pass(random_trace):
    verdict = check_convergence(random_trace)
    assert verdict["ok"]
    assert verdict["distinct_final_histories"] == 1


def test_convergence_fails_on_divergent_finals(random_trace):
    def corrupt(t):
        # flip the last snapshot of the first correct replica
        for ev in reversed(t.events):
            if ev["kind"] == "history" and ev["h"]:
                ev["h"] = list(reversed(ev["h"]))
                return
    bad = _mutated(random_trace, corrupt)
    assert not check_convergence(bad)["ok"]


def test_convergence_not_claimed_without_quiescence(random_trace):
    bad = _mutated(random_trace, lambda t: t.meta.update(quiescent=False))
    assert not check_convergence(bad)["ok"]


def test_stability_continuous_bfs_monotone_and_long():
    trace = run(continuous_scenario(1, "bfs"))
    report = stable_prefix(trace)
    lens = [l for _, l in report.curve]
    assert lens == sorted(lens)
    issued = sum(report.issued.values())
    assert report.final_len >= issued * 2 // 3
    verdict = check_stability(trace, min_fraction=2 / 3)
    assert verdict["ok"]


def test_stability_continuous_lifo_never_stabilizes():
    # Newest-first ordering keeps rewriting the head of the history, so
    # under continuous load the stabilized prefix stays empty.
    trace = run(continuous_scenario(1, "lifo"))
    report = stable_prefix(trace)
    assert report.final_len == 0
    assert not check_stability(trace, min_fraction=0.1)["ok"]


def test_stability_quiescent_prefix_is_full_history(random_trace):
    report = stable_prefix(random_trace)
    assert report.quiescent
    finals = {}
    for ev in random_trace.events:
        if ev["kind"] == "history":
            finals[ev["replica"]] = tuple(tuple(u) for u in ev["h"])
    assert report.stable_history in set(finals.values())


def test_starvation_verdicts():
    bfs = run(starvation_scenario("bfs"))
    fair = run(starvation_scenario("fair"))
    bfs_fair = fairness_report(bfs, stable_prefix(bfs), window=5)
    fair_fair = fairness_report(fair, stable_prefix(fair), window=5)
    assert bfs_fair["starvation"][STARVATION_VICTIM] == "fail"
    assert fair_fair["starvation"][STARVATION_VICTIM] == "pass"
    assert fair_fair["ok"]


def test_starvation_indeterminate_on_tiny_run():
    trace = run(fig1_scenario("fair"))
    verdict = fairness_report(trace, stable_prefix(trace), window=10)
    # no replica issued 10 commands, so no starvation claim either way
    assert set(verdict["starvation"].values()) == {"indeterminate"}


def test_safety_pass(random_trace):
    verdict = check_safety(random_trace, sample=5)
    assert verdict["ok"]
    for key, sub in verdict.items():
        if isinstance(sub, dict):
            assert sub["ok"], (key, sub["problems"])


def test_safety_detects_unissued_command(random_trace):
    def corrupt(t):
        for ev in t.events:
            if ev["kind"] == "history" and ev["h"]:
                ev["h"] = ev["h"] + [[99, 1]]
                return
    verdict = check_safety(_mutated(random_trace, corrupt))
    assert not verdict["validity"]["ok"]


def test_safety_detects_shrinking_history(random_trace):
    def corrupt(t):
        hits = [ev for ev in t.events if ev["kind"] == "history"
                and len(ev["h"]) > 1]
        hits[-1]["h"] = hits[-1]["h"][:1]
    verdict = check_safety(_mutated(random_trace, corrupt))
    assert not verdict["monotonicity"]["ok"]


def test_safety_detects_duplicate_delivery(random_trace):
    def corrupt(t):
        for ev in t.events:
            if ev["kind"] == "deliver":
                t.events.append(dict(ev, t=t.events[-1]["t"] + 1))
                return
    verdict = check_safety(_mutated(random_trace, corrupt))
    assert not verdict["rb_integrity"]["ok"]


def test_safety_detects_wrong_order(random_trace):
    def corrupt(t):
        hits = [ev for ev in t.events if ev["kind"] == "history"
                and len(ev["h"]) > 1]
        hits[-1]["h"] = list(reversed(hits[-1]["h"]))
    verdict = check_safety(_mutated(random_trace, corrupt))
    assert not verdict["recon_equivalence"]["ok"]


def test_safety_detects_missing_totality(random_trace):
    def corrupt(t):
        # erase one replica's record of ever inserting a foreign vertex,
        # picking one that no later insert at that replica hangs below so
        # the remaining event stream still parses
        victim = None
        crashed = set(t.meta["crashed"])
        for ev in t.events:
            if ev["kind"] != "insert" or ev["vertex"][0] == ev["replica"]:
                continue
            rid, vert = ev["replica"], ev["vertex"]
            if rid in crashed or vert[0] in crashed:
                continue
            used = any(e["kind"] == "insert" and e["replica"] == rid
                       and vert in e["parents"] for e in t.events)
            if not used:
                victim = (rid, tuple(vert))
                break
        t.events = [ev for ev in t.events
                    if not (ev["kind"] == "insert"
                            and ev["replica"] == victim[0]
                            and tuple(ev["vertex"]) == victim[1])]
        # drop that replica's snapshots so the lie is self-consistent
        t.events = [ev for ev in t.events
                    if not (ev["kind"] == "history"
                            and ev["replica"] == victim[0])]
    verdict = check_safety(_mutated(random_trace, corrupt))
    assert not verdict["rb_totality"]["ok"]


def test_run_all_checks_aggregates(random_trace):
    verdicts = run_all_checks(random_trace, sample=5)
    assert verdicts["ok"]
    assert verdicts["safety"]["ok"]
    assert verdicts["stability"]["ok"]
    assert verdicts["fairness"]["ok"]
    assert verdicts["convergence"]["ok"]
