import random

import pytest

from dagrepl.dag import Command, CommandDag, EPSILON
from dagrepl.reconcile import RECONCILERS, f_bfs, f_fair, f_lifo, \
    get_reconciler
from dagrepl.scenarios import FIG1_BFS_ORDER, FIG1_FAIR_ORDER

from oracles import brute_dist, brute_past, oracle_f_bfs, oracle_f_fair, \
    random_protocol_dag


def keys(history):
    return [(c.issuer, c.seq) for c in history]


def test_fig1_bfs_order(fig1_dag):
    assert keys(f_bfs(fig1_dag)) == FIG1_BFS_ORDER
    assert f_bfs(fig1_dag) == oracle_f_bfs(fig1_dag)


def test_fig1_fair_order(fig1_dag):
    assert keys(f_fair(fig1_dag)) == FIG1_FAIR_ORDER
    assert f_fair(fig1_dag) == oracle_f_fair(fig1_dag)


def test_fig1_lifo_order(fig1_dag):
    assert f_lifo(fig1_dag) == list(reversed(list(fig1_dag.commands())))


def test_empty_dag():
    dag = CommandDag()
    assert f_bfs(dag) == []
    assert f_fair(dag) == []
    assert f_lifo(dag) == []


def _edge_respecting(dag, history):
    pos = {c: k for k, c in enumerate(history)}
    for v in history:
        for u in brute_past(dag, v) - {v}:
            if pos[u] > pos[v]:
                return False
    return True


def test_totality_and_permutation_random():
    # Every reconciler must emit each vertex exactly once.
    rng = random.Random(23)
    for _ in range(150):
        dag = random_protocol_dag(rng, 25, 4)
        verts = set(dag.commands())
        for name, recon in RECONCILERS.items():
            hist = recon(dag)
            assert set(hist) == verts and len(hist) == len(verts), name


def test_bfs_is_edge_respecting_random():
    rng = random.Random(29)
    for _ in range(100):
        dag = random_protocol_dag(rng, 25, 4)
        assert _edge_respecting(dag, f_bfs(dag))


def test_fair_is_edge_respecting_random():
    rng = random.Random(31)
    for _ in range(100):
        dag = random_protocol_dag(rng, 25, 4)
        assert _edge_respecting(dag, f_fair(dag))


def test_bfs_matches_level_oracle_random():
    rng = random.Random(37)
    for _ in range(100):
        dag = random_protocol_dag(rng, 25, 4)
        assert f_bfs(dag) == oracle_f_bfs(dag)


def test_fair_matches_interpreter_oracle_random():
    rng = random.Random(41)
    for _ in range(100):
        dag = random_protocol_dag(rng, 25, 4)
        assert f_fair(dag) == oracle_f_fair(dag)


def test_bfs_depends_only_on_structure():
    # Rebuilding the same DAG in a different insertion order must not
    # change the level order.
    rng = random.Random(43)
    for _ in range(40):
        dag = random_protocol_dag(rng, 15, 3)
        verts = list(dag.commands())
        other = CommandDag()
        remaining = list(verts)
        rng.shuffle(remaining)
        inserted = set()
        while remaining:
            for v in list(remaining):
                if all(p is EPSILON or p in inserted
                       for p in dag.parents_of(v)):
                    other = other.insert(v, dag.parents_of(v))
                    inserted.add(v)
                    remaining.remove(v)
        assert f_bfs(other) == f_bfs(dag)
        assert f_fair(other) == f_fair(dag)


def test_lifo_is_reversed_insertion_random():
    rng = random.Random(47)
    for _ in range(60):
        dag = random_protocol_dag(rng, 20, 4)
        assert f_lifo(dag) == list(reversed(list(dag.commands())))


def test_bfs_levels_sorted():
    rng = random.Random(53)
    for _ in range(60):
        dag = random_protocol_dag(rng, 25, 4)
        hist = f_bfs(dag)
        dists = [brute_dist(dag, v) for v in hist]
        assert dists == sorted(dists)
        for a, b in zip(hist, hist[1:]):
            if brute_dist(dag, a) == brute_dist(dag, b):
                assert (a.issuer, a.seq) < (b.issuer, b.seq)


def test_determinism():
    rng = random.Random(59)
    dag = random_protocol_dag(rng, 25, 4)
    for recon in (f_bfs, f_fair, f_lifo):
        assert recon(dag) == recon(dag)


def test_registry():
    assert get_reconciler("bfs") is f_bfs
    assert get_reconciler("fair") is f_fair
    assert get_reconciler("lifo") is f_lifo
    with pytest.raises(KeyError):
        get_reconciler("bogus")
