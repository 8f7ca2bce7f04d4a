"""The replica automaton: local append and parent-buffered delivery.

Each replica owns a local command DAG and derives its visible history by
running the reconciliation function over it.  Appends are wait-free: the
enabledness check, vertex creation and history update touch only local
state; dissemination is handed to the broadcast layer.  Delivered vertices
whose parents have not arrived yet are parked until they have.

The history is recomputed lazily (cached, invalidated on any DAG change);
this is observationally identical to recomputing after every handler since
nothing reads the history in between.
"""

from __future__ import annotations

from .broadcast import BroadcastMessage
from .dag import Command, CommandDag, EPSILON
from .datatype import BOTTOM, DataTypeSpec, replay


class InvariantViolation(Exception):
    pass


class Replica:
    def __init__(self, rid: int, spec: DataTypeSpec, recon,
                 broadcast=None, on_insert=None):
        self.id = rid
        self.spec = spec
        self.recon = recon
        self.dag = CommandDag()
        self.next_seq = 1
        # missing parent -> list of parked BroadcastMessages
        self.pending = {}
        self._broadcast = broadcast if broadcast else (lambda msg: None)
        self._on_insert = on_insert
        self._history = []
        self._stale = False
        self._seen_seq = {}   # issuer -> highest inserted sequence number

    @property
    def history(self):
        if self._stale:
            self._history = list(self.recon(self.dag))
            self._stale = False
        return self._history

    def history_of(self):
        return list(self.history)

    def append(self, op):
        """Issue `op` locally; returns its response, or BOTTOM untouched.

        The enabledness check replays the current history from scratch.
        On success the new vertex hangs off the current leaves, the
        history is refreshed, the vertex is broadcast, and the response is
        the one the command has in the post-insertion history.
        """
        state, _ = replay(self.spec, self.history)
        _, resp = self.spec.apply(state, op)
        if resp == BOTTOM:
            return BOTTOM
        parents = self.dag.leaves()
        v = Command(op, self.id, self.next_seq)
        self.next_seq += 1
        self._insert(v, parents)
        self._broadcast(BroadcastMessage(v, frozenset(parents)))
        hist = self.history
        pos = hist.index(v)
        _, responses = replay(self.spec, hist[:pos + 1])
        return responses[-1]

    def on_deliver(self, msg: BroadcastMessage):
        """Handle an r-delivered vertex, parking it if parents are missing."""
        if msg.vertex in self.dag:
            raise InvariantViolation(
                "duplicate delivery reached replica %d: %r"
                % (self.id, msg.vertex))
        missing = self._missing_parent(msg.parents)
        if missing is not None:
            self.pending.setdefault(missing, []).append(msg)
            return
        queue = [msg]
        while queue:
            m = queue.pop(0)
            self._insert(m.vertex, m.parents)
            for parked in self.pending.pop(m.vertex, []):
                still_missing = self._missing_parent(parked.parents)
                if still_missing is None:
                    queue.append(parked)
                else:
                    self.pending.setdefault(still_missing, []).append(parked)

    def _missing_parent(self, parents):
        for p in parents:
            if p is not EPSILON and p not in self.dag:
                return p
        return None

    def _insert(self, v: Command, parents):
        last = self._seen_seq.get(v.issuer, 0)
        if v.seq != last + 1:
            raise InvariantViolation(
                "sequence gap at replica %d: inserting %r after seq %d"
                % (self.id, v, last))
        self._seen_seq[v.issuer] = v.seq
        self.dag = self.dag.insert(v, parents)
        self._stale = True
        if self._on_insert:
            self._on_insert(v, parents)
