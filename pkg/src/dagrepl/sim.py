"""Seeded deterministic simulation of replicas under asynchrony and faults.

A Scenario describes the replica count, data type, reconciliation
function, workload (timed appends), fault schedule (crashes and temporary
partitions) and a seed.  `run` executes it as a single-threaded
discrete-event loop and returns a Trace: a totally ordered event log with
per-replica history snapshots, consumed by the checkers in
`dagrepl.checks`.

Timing model: channel delays are drawn from the seeded RNG (or pinned by
an explicit per-message delivery script); partitions defer deliveries on
cut links until the partition ends, never dropping them.  A crash
permanently silences a replica; messages it still had in flight are
dropped or kept per destination (seeded coin), which is what exercises the
broadcast layer's forwarding path.
"""

from __future__ import annotations

import heapq
import json
import random
from dataclasses import dataclass, field

from .broadcast import ReliableBroadcast
from .dag import Command
from .datatype import BOTTOM, get_datatype
from .reconcile import get_reconciler
from .replica import Replica


class ConfigError(Exception):
    pass


@dataclass
class Partition:
    links: list          # [(a, b), ...]; each link is cut in both directions
    start: int
    end: int

    def cuts(self, src, dst, at):
        if not (self.start <= at < self.end):
            return False
        return any({src, dst} == {a, b} for a, b in self.links)


@dataclass
class Scenario:
    n: int
    datatype: str
    recon: str
    workload: list                     # [(time, replica, op), ...]
    crashes: list = field(default_factory=list)      # [(replica, time)]
    partitions: list = field(default_factory=list)   # [Partition, ...]
    seed: int = 0
    delay_max: int = 10
    horizon: int = 0                   # max processed events; 0 = unlimited
    quiescence_flush: bool = True
    snapshot_every: int = 1
    deliveries: dict | None = None     # (dst, issuer, seq) -> time; scripted
    name: str = ""

    def to_dict(self):
        return {
            "name": self.name,
            "n": self.n,
            "datatype": self.datatype,
            "recon": self.recon,
            "seed": self.seed,
            "delay_max": self.delay_max,
            "horizon": self.horizon,
            "quiescence_flush": self.quiescence_flush,
            "snapshot_every": self.snapshot_every,
            "workload": [[t, r, list(op)] for t, r, op in self.workload],
            "crashes": [[r, t] for r, t in self.crashes],
            "partitions": [{"links": [list(l) for l in p.links],
                            "start": p.start, "end": p.end}
                           for p in self.partitions],
            "deliveries": (None if self.deliveries is None else
                           sorted([dst, j, s, t] for (dst, j, s), t
                                  in self.deliveries.items())),
        }

    @classmethod
    def from_dict(cls, d):
        try:
            deliveries = d.get("deliveries")
            if deliveries is not None:
                deliveries = {(dst, j, s): t for dst, j, s, t in deliveries}
            return cls(
                n=d["n"],
                datatype=d["datatype"],
                recon=d["recon"],
                workload=[(t, r, tuple(op)) for t, r, op in d["workload"]],
                crashes=[(r, t) for r, t in d.get("crashes", [])],
                partitions=[Partition([tuple(l) for l in p["links"]],
                                      p["start"], p["end"])
                            for p in d.get("partitions", [])],
                seed=d.get("seed", 0),
                delay_max=d.get("delay_max", 10),
                horizon=d.get("horizon", 0),
                quiescence_flush=d.get("quiescence_flush", True),
                snapshot_every=d.get("snapshot_every", 1),
                deliveries=deliveries,
                name=d.get("name", ""),
            )
        except (KeyError, TypeError, ValueError) as exc:
            raise ConfigError("malformed scenario: %s" % exc) from exc

    def save(self, path):
        with open(path, "w") as fh:
            json.dump(self.to_dict(), fh, indent=2, sort_keys=True)
            fh.write("\n")

    @classmethod
    def load(cls, path):
        with open(path) as fh:
            return cls.from_dict(json.load(fh))


TRACE_SCHEMA = 1


class Trace:
    def __init__(self, meta, events):
        self.meta = meta
        self.events = events

    def to_jsonl(self, path):
        with open(path, "w") as fh:
            fh.write(json.dumps(self.meta, sort_keys=True) + "\n")
            for ev in self.events:
                fh.write(json.dumps(ev, sort_keys=True) + "\n")

    @classmethod
    def from_jsonl(cls, path):
        with open(path) as fh:
            lines = [json.loads(line) for line in fh if line.strip()]
        if not lines or "schema" not in lines[0]:
            raise ConfigError("not a trace file: %s" % path)
        return cls(lines[0], lines[1:])


def _validate(scenario: Scenario):
    if scenario.n < 1:
        raise ConfigError("need at least one replica")
    get_datatype(scenario.datatype)
    get_reconciler(scenario.recon)
    if scenario.snapshot_every < 1:
        raise ConfigError("snapshot_every must be >= 1")
    for t, r, op in scenario.workload:
        if not (1 <= r <= scenario.n):
            raise ConfigError("workload replica %r out of range" % (r,))
        if t < 0:
            raise ConfigError("negative workload time")
    for r, t in scenario.crashes:
        if not (1 <= r <= scenario.n):
            raise ConfigError("crash replica %r out of range" % (r,))
    for p in scenario.partitions:
        if p.end <= p.start:
            raise ConfigError("partition must have a finite positive span")


class _Sim:
    def __init__(self, scenario: Scenario):
        _validate(scenario)
        self.scenario = scenario
        self.rng = random.Random(scenario.seed)
        self.spec = get_datatype(scenario.datatype)
        self.recon = get_reconciler(scenario.recon)
        self.events = []
        self.step = 0
        self.now = 0
        self.heap = []
        self.push_counter = 0
        self.crashed = {}          # rid -> crash time
        self.keep_after_crash = {} # rid -> {dst: bool}
        self.handler_count = {r: 0 for r in range(1, scenario.n + 1)}
        times = [t for t, _, _ in scenario.workload]
        times += [t for _, t in scenario.crashes]
        times += [p.end for p in scenario.partitions]
        if scenario.deliveries:
            times += list(scenario.deliveries.values())
        self.last_input_time = max([t for t, _, _ in scenario.workload],
                                   default=0)
        self.flush_base = (max(times, default=0)) + 1000
        self.flush_tick = 0
        self.quiescent = False

        ids = list(range(1, scenario.n + 1))
        self.rb = ReliableBroadcast(
            ids, self._send, self._rb_deliver,
            is_crashed=lambda rid: rid in self.crashed)
        self.replicas = {}
        for rid in ids:
            self.replicas[rid] = Replica(
                rid, self.spec, self.recon,
                broadcast=self._make_broadcast(rid),
                on_insert=self._make_on_insert(rid))

    def _make_broadcast(self, rid):
        return lambda msg: self.rb.r_broadcast(rid, msg)

    def _make_on_insert(self, rid):
        def hook(v, parents):
            self._emit({"kind": "insert", "replica": rid,
                        "vertex": [v.issuer, v.seq],
                        "parents": sorted([p.issuer, p.seq] for p in parents
                                          if isinstance(p, Command))})
        return hook

    # --- event plumbing ------------------------------------------------

    def _emit(self, ev):
        self.step += 1
        ev["t"] = self.step
        self.events.append(ev)

    def _push(self, at, kind, payload):
        self.push_counter += 1
        heapq.heappush(self.heap, (at, self.push_counter, kind, payload))

    def _snapshot(self, rid, force=False):
        self.handler_count[rid] += 1
        due = (force
               or self.handler_count[rid] % self.scenario.snapshot_every == 0
               or self.now >= self.last_input_time)
        if due:
            hist = self.replicas[rid].history
            self._emit({"kind": "history", "replica": rid,
                        "h": [[c.issuer, c.seq] for c in hist]})

    # --- transport ------------------------------------------------------

    def _deliver_time(self, src, dst, env):
        sc = self.scenario
        if sc.deliveries is not None:
            v = env.payload.vertex
            at = sc.deliveries.get((dst, v.issuer, v.seq))
            if at is None:
                if not sc.quiescence_flush:
                    return None
                self.flush_tick += 1
                at = self.flush_base + self.flush_tick
            return max(at, self.now + 1)
        at = self.now + self.rng.randint(1, sc.delay_max)
        # a partition covering the arrival defers it to the partition end;
        # chained partitions are re-checked until the time is clear
        moved = True
        while moved:
            moved = False
            for p in sc.partitions:
                if p.cuts(src, dst, at):
                    at = p.end
                    moved = True
        if not sc.quiescence_flush and at > self.last_input_time:
            return None
        return at

    def _send(self, src, dst, env):
        at = self._deliver_time(src, dst, env)
        self._emit({"kind": "send", "src": src, "dst": dst,
                    "uid": [env.payload.vertex.issuer,
                            env.payload.vertex.seq],
                    "at": self.now, "deliver_at": at})
        if at is not None:
            self._push(at, "recv", (src, dst, env))

    def _rb_deliver(self, rid, msg):
        self._emit({"kind": "deliver", "replica": rid,
                    "uid": [msg.vertex.issuer, msg.vertex.seq]})
        self.replicas[rid].on_deliver(msg)

    # --- handlers ---------------------------------------------------------

    def _handle_append(self, rid, op):
        if rid in self.crashed:
            return
        before = len(self.replicas[rid].dag)
        resp = self.replicas[rid].append(op)
        if resp == BOTTOM and len(self.replicas[rid].dag) == before:
            self._emit({"kind": "append_bottom", "replica": rid,
                        "op": list(op)})
            return
        seq = self.replicas[rid].next_seq - 1
        self._emit({"kind": "append", "replica": rid, "op": list(op),
                    "seq": seq, "resp": resp})
        self._snapshot(rid, force=True)

    def _handle_recv(self, src, dst, env):
        ct = self.crashed.get(src)
        if ct is not None and self.now > ct:
            # in flight when the sender crashed; kept or dropped per
            # destination so a later message never outruns an earlier one
            if not self.keep_after_crash[src].get(dst, False):
                return
        if dst in self.crashed:
            return
        before = len(self.replicas[dst].dag)
        self.rb.on_receive(dst, env)
        if len(self.replicas[dst].dag) != before:
            self._snapshot(dst)

    def _handle_crash(self, rid):
        self.crashed[rid] = self.now
        self.keep_after_crash[rid] = {
            dst: self.rng.random() < 0.5
            for dst in range(1, self.scenario.n + 1) if dst != rid}
        self._emit({"kind": "crash", "replica": rid})

    # --- main loop ---------------------------------------------------------

    def run(self):
        sc = self.scenario
        for t, r, op in sc.workload:
            self._push(t, "append", (r, op))
        for r, t in sc.crashes:
            self._push(t, "crash", r)
        for p in sc.partitions:
            self._push(p.start, "part_start", p)
            self._push(p.end, "part_end", p)
        processed = 0
        truncated = False
        while self.heap:
            if sc.horizon and processed >= sc.horizon:
                truncated = True
                break
            at, _, kind, payload = heapq.heappop(self.heap)
            self.now = at
            processed += 1
            if kind == "append":
                self._handle_append(*payload)
            elif kind == "recv":
                self._handle_recv(*payload)
            elif kind == "crash":
                self._handle_crash(payload)
            elif kind == "part_start":
                self._emit({"kind": "partition_start",
                            "links": [list(l) for l in payload.links]})
            elif kind == "part_end":
                self._emit({"kind": "partition_end",
                            "links": [list(l) for l in payload.links]})
        for rid in sorted(self.replicas):
            if rid not in self.crashed:
                self._snapshot(rid, force=True)
        self.quiescent = sc.quiescence_flush and not truncated
        meta = {
            "schema": TRACE_SCHEMA,
            "scenario": sc.to_dict(),
            "quiescent": self.quiescent,
            "crashed": sorted(self.crashed),
        }
        return Trace(meta, self.events)


def run(scenario: Scenario) -> Trace:
    """Execute a scenario; fixed seed means a bit-identical trace."""
    return _Sim(scenario).run()
