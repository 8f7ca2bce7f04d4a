"""The collaboratively constructed command DAG.

Vertices are commands (operation, issuer, sequence number) hanging off a
synthetic root EPSILON.  The DAG caches, per vertex, its greatest distance
from the root and its causal past (as a bitmask over insertion indices);
both are immutable once the vertex is inserted, because a vertex's parent
set never changes.

CommandDag is value-semantic: insert_vertex returns a new DAG and never
touches the old one.
"""

from __future__ import annotations

from typing import Iterable, NamedTuple


class DagError(Exception):
    pass


class MissingParent(DagError):
    pass


class DuplicateVertex(DagError):
    pass


class UnknownVertex(DagError):
    pass


class Command(NamedTuple):
    op: tuple
    issuer: int
    seq: int

    def __repr__(self):
        return "(%s,%d,%d)" % (" ".join(str(x) for x in self.op),
                               self.issuer, self.seq)


class _Root:
    """The synthetic root; never a Command, never part of a history."""

    __slots__ = ()

    def __repr__(self):
        return "eps"


EPSILON = _Root()


class CommandDag:
    """Immutable command DAG with cached distances and causal pasts."""

    __slots__ = ("_parents", "_dist", "_index", "_past", "_order",
                 "_childless")

    def __init__(self, parents=None, dist=None, index=None, past=None,
                 order=(), childless=frozenset()):
        self._parents = parents or {}    # Command -> frozenset of parents
        self._dist = dist or {}          # Command -> int
        self._index = index or {}        # Command -> bit position
        self._past = past or {}          # Command -> bitmask incl. own bit
        self._order = tuple(order)       # commands in insertion order
        self._childless = childless      # commands with no outgoing edge

    def __len__(self):
        return len(self._order)

    def __contains__(self, v):
        return v is EPSILON or v in self._parents

    def commands(self):
        """All commands, in local insertion order."""
        return self._order

    def insertion_order(self):
        return self._order

    def parents_of(self, v):
        try:
            return self._parents[v]
        except KeyError:
            raise UnknownVertex(repr(v)) from None

    def insert(self, v: Command, parents: Iterable) -> "CommandDag":
        """Return a new DAG with `v` added below `parents`.

        Parents may include EPSILON; when the DAG is empty the root stands
        in as the only parent.
        """
        parents = frozenset(parents)
        if not parents:
            raise MissingParent("vertex %r needs at least one parent" % (v,))
        if v in self._parents:
            raise DuplicateVertex(repr(v))
        for p in parents:
            if p is not EPSILON and p not in self._parents:
                raise MissingParent(repr(p))
        new_parents = dict(self._parents)
        new_parents[v] = parents
        new_dist = dict(self._dist)
        new_dist[v] = 1 + max(
            0 if p is EPSILON else self._dist[p] for p in parents)
        bit = len(self._order)
        new_index = dict(self._index)
        new_index[v] = bit
        mask = 1 << bit
        for p in parents:
            if p is not EPSILON:
                mask |= self._past[p]
        new_past = dict(self._past)
        new_past[v] = mask
        new_childless = (self._childless - parents) | {v}
        return CommandDag(new_parents, new_dist, new_index, new_past,
                          self._order + (v,), new_childless)

    def leaves(self):
        """Vertices with no outgoing edge; {EPSILON} on the empty DAG."""
        if not self._order:
            return {EPSILON}
        return set(self._childless)

    def dist(self, v) -> int:
        if v is EPSILON:
            return 0
        try:
            return self._dist[v]
        except KeyError:
            raise UnknownVertex(repr(v)) from None

    def past_mask(self, v) -> int:
        """Bitmask of past(v) over insertion indices, including v itself."""
        try:
            return self._past[v]
        except KeyError:
            raise UnknownVertex(repr(v)) from None

    def all_mask(self) -> int:
        return (1 << len(self._order)) - 1

    def expand_mask(self, mask: int):
        """Commands whose bits are set, in insertion-index order."""
        return [c for i, c in enumerate(self._order) if (mask >> i) & 1]

    def past(self, v):
        """v plus every vertex with a path to v; EPSILON is excluded."""
        return set(self.expand_mask(self.past_mask(v)))


def empty_dag() -> CommandDag:
    return CommandDag()


def insert_vertex(dag: CommandDag, v: Command, parents) -> CommandDag:
    return dag.insert(v, parents)


def leaves(dag: CommandDag):
    return dag.leaves()


def past(dag: CommandDag, v: Command):
    return dag.past(v)


def dist(dag: CommandDag, v) -> int:
    return dag.dist(v)


def topo_sort(dag: CommandDag, subset):
    """Edge-respecting order of `subset`, ties by (dist, issuer, seq).

    An edge u -> w forces dist(u) < dist(w), so sorting by the triple is a
    topological order of any subset.
    """
    return sorted(subset, key=lambda c: (dag.dist(c), c.issuer, c.seq))


# --- textual DAG fixtures ----------------------------------------------------
#
# One line per vertex, root implied:
#
#     issuer seq op-tokens : parent-list
#
# where op-tokens is e.g. "mkdir / d1", "rmdir /d2" or "push 5" and the
# parent list is "eps" or space-separated issuer.seq pairs.  Lines starting
# with "#" and blank lines are ignored.

def _parse_op(tokens):
    kind = tokens[0]
    if kind == "mkdir":
        return ("mkdir", tokens[1], tokens[2])
    if kind == "rmdir":
        return ("rmdir", tokens[1])
    if kind == "push":
        return ("push", int(tokens[1]))
    raise ValueError("unknown op in fixture: %r" % (tokens,))


def parse_dag(text: str) -> CommandDag:
    dag = CommandDag()
    by_key = {}
    for line in text.splitlines():
        line = line.strip()
        if not line or line.startswith("#"):
            continue
        head, _, tail = line.partition(":")
        fields = head.split()
        issuer, seq = int(fields[0]), int(fields[1])
        op = _parse_op(fields[2:])
        parent_keys = tail.split()
        if parent_keys == ["eps"]:
            parents = {EPSILON}
        else:
            parents = set()
            for key in parent_keys:
                pj, ps = key.split(".")
                parents.add(by_key[(int(pj), int(ps))])
        v = Command(op, issuer, seq)
        by_key[(issuer, seq)] = v
        dag = dag.insert(v, parents)
    return dag


def format_dag(dag: CommandDag) -> str:
    lines = []
    for v in dag.commands():
        parents = dag.parents_of(v)
        if EPSILON in parents:
            plist = "eps"
        else:
            plist = " ".join("%d.%d" % (p.issuer, p.seq)
                             for p in sorted(parents,
                                             key=lambda c: (c.issuer, c.seq)))
        lines.append("%d %d %s : %s"
                     % (v.issuer, v.seq, " ".join(str(x) for x in v.op),
                        plist))
    return "\n".join(lines) + "\n"
