"""Decentralized unstructured overlay: peerviews and flooding search.

TTL handling is decrement-before-forward.  The originator transmits with
``max(ttl - 1, 0)``, every relay transmits with one less than it received, and
a copy arriving with TTL 0 is processed but not relayed.  A query with TTL t
therefore reaches nodes up to ``max(t, 1)`` hops away.

Responses (QUERY_HIT, PONG) retrace the ``first_from`` pointers recorded in
each node's seen table.
"""

from __future__ import annotations

import logging
from collections import Counter, OrderedDict
from dataclasses import dataclass, field

from .core import Descriptor, Message, MessageKind
from .engine import Simulator
from .membership import (ConsistencyMode, ConsistencyPolicy, DescriptorStore, Group,
                         Mediator, PeerCache, bootstrap_mediated, scope_check)
from .topology import TopologySnapshot

log = logging.getLogger(__name__)


@dataclass
class PeerView:
    neighbors: set[int] = field(default_factory=set)
    max_size: int = 32

    def full(self) -> bool:
        return len(self.neighbors) >= self.max_size


class SeenTable:
    """msg_id -> (first_from, seen_at), evicting entries older than ``retention``."""

    def __init__(self, retention: float = 600.0):
        self.retention = retention
        self._entries: OrderedDict[int, tuple[int | None, float]] = OrderedDict()

    def evict(self, now: float) -> None:
        while self._entries:
            msg_id, (_, seen_at) = next(iter(self._entries.items()))
            if now - seen_at <= self.retention:
                break
            self._entries.popitem(last=False)

    def add(self, msg_id: int, first_from: int | None, now: float) -> None:
        self.evict(now)
        self._entries[msg_id] = (first_from, now)

    def get(self, msg_id: int, now: float) -> tuple[int | None, float] | None:
        self.evict(now)
        return self._entries.get(msg_id)

    def __contains__(self, msg_id: int) -> bool:
        return msg_id in self._entries

    def __len__(self) -> int:
        return len(self._entries)


@dataclass(frozen=True)
class QueryBody:
    key: int | None
    forward_prob: float = 1.0


@dataclass(frozen=True)
class ReplyBody:
    request_id: int
    responder: int
    descriptors: tuple[Descriptor, ...]
    route: tuple[int, ...]


@dataclass
class Hit:
    responder: int
    descriptors: tuple[Descriptor, ...]
    route: tuple[int, ...]
    received_at: float


@dataclass
class LocalHit:
    descriptor: Descriptor
    cached: bool = False


@dataclass
class FloodTrace:
    msg_id: int
    origin: int
    kind: MessageKind
    key: int | None
    started_at: float
    processed: Counter = field(default_factory=Counter)
    arrival_ttl: dict[int, int] = field(default_factory=dict)
    copies: int = 0
    duplicates: int = 0
    scope_drops: int = 0
    path_lost: int = 0
    hits: list[Hit] = field(default_factory=list)

    @property
    def reached(self) -> set[int]:
        return set(self.processed)

    def coverage(self, population: int) -> float:
        """Fraction of the other ``population - 1`` nodes that processed the query."""
        return len(self.processed) / (population - 1) if population > 1 else 1.0


@dataclass
class DumNode:
    node_id: int
    view: PeerView
    seen: SeenTable
    store: DescriptorStore = field(default_factory=DescriptorStore)
    cache: PeerCache = field(default_factory=PeerCache)


class DumOverlay:
    """Unstructured overlay hosted on a :class:`Simulator`."""

    def __init__(self, sim: Simulator, snapshot: TopologySnapshot, *, peerview_max: int = 32,
                 seen_retention: float = 600.0, policy: ConsistencyPolicy | None = None,
                 groups: dict[int, Group] | None = None, mediator: Mediator | None = None,
                 repair_walk: int = 3):
        self.sim = sim
        self.policy = policy or ConsistencyPolicy()
        self.groups = groups or {}
        self.mediator = mediator
        self.repair_walk = repair_walk
        self.peerview_max = peerview_max
        self.nodes: dict[int, DumNode] = {}
        self.traces: dict[int, FloodTrace] = {}
        self.counters: Counter[str] = Counter()
        adj = snapshot.adjacency()
        for node in snapshot.nodes:
            # a node seeded with a larger view than the cap keeps it; the cap governs growth
            cap = max(peerview_max, len(adj[node]))
            self.nodes[node] = DumNode(node, PeerView(set(adj[node]), cap), SeenTable(seen_retention))
            sim.add_node(node, self._make_handler(node))
        sim.leave_listeners.append(self._on_leave)
        sim.join_listeners.append(self._on_join)

    def _make_handler(self, node: int):
        return lambda msg: self._receive(node, msg)

    # data

    def publish(self, node: int, descriptor: Descriptor) -> None:
        """Resources stay with their owner; publishing is purely local."""
        self.nodes[node].store.store(descriptor)

    def local_lookup(self, node: int, key: int) -> list[LocalHit]:
        now = self.sim.now
        state = self.nodes[node].store
        found = [LocalHit(d) for d in state.lookup(key, now)]
        if self.policy.mode is ConsistencyMode.DUM_CACHE_EXPIRY:
            owners = {h.descriptor.owner for h in found}
            found.extend(LocalHit(d, cached=True) for d in state.cached(key, now)
                         if d.owner not in owners)
        return found

    # flooding

    def flood(self, origin: int, key: int | None, ttl: int, *, forward_prob: float = 1.0,
              group_tag: int | None = None, kind: MessageKind = MessageKind.QUERY) -> FloodTrace:
        """Originate a flood; the returned trace fills in as the simulation runs."""
        if ttl < 0:
            raise ValueError("ttl must be non-negative")
        if not 0.0 <= forward_prob <= 1.0:
            raise ValueError("forward_prob must be in [0, 1]")
        msg = Message(self.sim.new_msg_id(), kind, origin, ttl=ttl, group_tag=group_tag,
                      payload=QueryBody(key, forward_prob))
        trace = FloodTrace(msg.msg_id, origin, kind, key, self.sim.now)
        self.traces[msg.msg_id] = trace
        state = self.nodes[origin]
        state.seen.add(msg.msg_id, None, self.sim.now)
        out = msg.forwarded(origin, max(ttl - 1, 0))
        for nbr in sorted(state.view.neighbors):
            self._transmit(trace, out, nbr)
        return trace

    def probabilistic_flood(self, origin: int, key: int | None, ttl: int,
                            forward_prob: float, **kw) -> FloodTrace:
        return self.flood(origin, key, ttl, forward_prob=forward_prob, **kw)

    def ping(self, origin: int, ttl: int) -> FloodTrace:
        return self.flood(origin, None, ttl, kind=MessageKind.PING)

    def _transmit(self, trace: FloodTrace, msg: Message, to: int) -> None:
        trace.copies += 1
        self.sim.send(msg, to)

    def _receive(self, node: int, msg: Message) -> None:
        if msg.kind in (MessageKind.QUERY, MessageKind.PING):
            self._on_request(node, msg)
        elif msg.kind in (MessageKind.QUERY_HIT, MessageKind.PONG):
            self._on_reply(node, msg)

    def _on_request(self, node: int, msg: Message) -> None:
        trace = self.traces.get(msg.msg_id)
        state = self.nodes[node]
        now = self.sim.now
        if not scope_check(msg, self.groups.get(msg.group_tag), node):
            self.sim.counters["dropped_scope"] += 1
            if trace:
                trace.scope_drops += 1
            return
        if msg.msg_id in state.seen:
            if trace:
                trace.duplicates += 1
            return
        state.seen.add(msg.msg_id, msg.src, now)
        state.cache.saw(msg.src, now)
        if trace:
            trace.processed[node] += 1
            trace.arrival_ttl[node] = msg.ttl
        body: QueryBody = msg.payload
        if msg.kind is MessageKind.PING:
            self._reply(node, msg, MessageKind.PONG, ())
        else:
            found = tuple(h.descriptor for h in self.local_lookup(node, body.key))
            if found:
                self._reply(node, msg, MessageKind.QUERY_HIT, found)
        if msg.ttl and msg.ttl > 0:
            relay = msg.forwarded(node, msg.ttl - 1)
            rng = self.sim.rng("dum.forward")
            for nbr in sorted(state.view.neighbors):
                if nbr == msg.src:
                    continue
                p = body.forward_prob
                if p < 1.0 and (p <= 0.0 or rng.random() >= p):
                    continue
                if trace:
                    self._transmit(trace, relay, nbr)
                else:
                    self.sim.send(relay, nbr)

    def _reply(self, node: int, request: Message, kind: MessageKind,
               descriptors: tuple[Descriptor, ...]) -> None:
        body = ReplyBody(request.msg_id, node, descriptors, (node,))
        reply = Message(self.sim.new_msg_id(), kind, node, payload=body)
        self._route_back(node, reply, request.src)

    def _route_back(self, node: int, reply: Message, next_hop: int | None) -> None:
        trace = self.traces.get(reply.payload.request_id)
        if next_hop is None or not self.sim.is_alive(next_hop):
            self.counters["path_lost"] += 1
            self.sim.counters["path_lost"] += 1
            if trace:
                trace.path_lost += 1
            return
        self.sim.send(reply.forwarded(node, None), next_hop)

    def _on_reply(self, node: int, msg: Message) -> None:
        body: ReplyBody = msg.payload
        body = ReplyBody(body.request_id, body.responder, body.descriptors, body.route + (node,))
        state = self.nodes[node]
        entry = state.seen.get(body.request_id, self.sim.now)
        trace = self.traces.get(body.request_id)
        if entry is None:
            self._route_back(node, Message(msg.msg_id, msg.kind, node, payload=body), None)
            return
        first_from, _ = entry
        if self.policy.mode is ConsistencyMode.DUM_CACHE_EXPIRY:
            for d in body.descriptors:
                state.store.remember(d)
        if first_from is None:
            if trace:
                trace.hits.append(Hit(body.responder, body.descriptors, body.route, self.sim.now))
            if msg.kind is MessageKind.PONG:
                state.cache.saw(body.responder, self.sim.now)
            return
        self._route_back(node, Message(msg.msg_id, msg.kind, node, payload=body), first_from)

    # membership dynamics

    def _link(self, u: int, v: int) -> bool:
        a, b = self.nodes[u].view, self.nodes[v].view
        if u == v or v in a.neighbors or a.full() or b.full():
            return False
        a.neighbors.add(v)
        b.neighbors.add(u)
        return True

    def _random_walk(self, start: int, steps: int) -> int:
        rng = self.sim.rng("dum.repair")
        cur = start
        for _ in range(steps):
            nbrs = sorted(n for n in self.nodes[cur].view.neighbors if self.sim.is_alive(n))
            if not nbrs:
                break
            cur = rng.choice(nbrs)
        return cur

    def _on_leave(self, node: int) -> None:
        if node not in self.nodes:
            return
        for nbr in sorted(self.nodes[node].view.neighbors):
            other = self.nodes[nbr]
            other.view.neighbors.discard(node)
            if not self.sim.is_alive(nbr):
                continue
            survivors = sorted(n for n in other.view.neighbors if self.sim.is_alive(n))
            if not survivors:
                continue
            start = self.sim.rng("dum.repair").choice(survivors)
            target = self._random_walk(start, self.repair_walk)
            if self._link(nbr, target):
                self.counters["repairs"] += 1
        self.nodes[node].view.neighbors.clear()

    def _on_join(self, node: int) -> None:
        if node not in self.nodes:
            return
        state = self.nodes[node]
        want = min(state.view.max_size, self.peerview_max)
        if self.mediator is not None:
            entry = bootstrap_mediated(self.mediator, node, self.sim.rng("dum.bootstrap"))
        else:
            entry = [n for n in state.cache.nodes() if self.sim.is_alive(n)]
        for other in entry[:want]:
            if other in self.nodes and self.sim.is_alive(other):
                self._link(node, other)

    # inspection

    def snapshot(self) -> TopologySnapshot:
        live = [n for n in sorted(self.nodes) if self.sim.is_alive(n)]
        alive = set(live)
        edges = {(min(u, v), max(u, v)) for u in live
                 for v in self.nodes[u].view.neighbors if v in alive}
        return TopologySnapshot(tuple(live), frozenset(edges))
