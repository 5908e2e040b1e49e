"""Chord ring: key placement on successors, join/stabilize, basic and finger lookups.

Interval conventions: node ``n`` owns keys in ``(predecessor, n]``; the i-th
finger (1-based) targets ``successor(n + 2**(i-1))``.  Remote state is read
directly from the addressed node object, but only if that node is alive;
lookups are resolved atomically at the current virtual time and count one hop
per node-to-node transfer of the query.
"""

from __future__ import annotations

import bisect
import logging
from dataclasses import dataclass, field
from typing import Iterable, Sequence

from .core import Descriptor, KeySpace
from .engine import Simulator
from .errors import EmptyRing, JoinFailed, LookupTimeout
from .membership import (ConsistencyMode, ConsistencyPolicy, DescriptorStore, Republish,
                         consistency_tick)

log = logging.getLogger(__name__)


def successor_oracle(ids: Sequence[int], key: int, ks: KeySpace | None = None) -> int:
    """First id equal to or following ``key`` on the ring; ``ids`` must be sorted."""
    if not ids:
        raise EmptyRing("no live nodes")
    if ks is not None:
        key = ks.wrap(key)
    i = bisect.bisect_left(ids, key)
    return ids[i] if i < len(ids) else ids[0]


@dataclass
class ChordNode:
    id: int
    successor: int
    predecessor: int | None = None
    finger: list[int] = field(default_factory=list)
    succ_list: list[int] = field(default_factory=list)
    store: DescriptorStore = field(default_factory=DescriptorStore)


@dataclass
class LookupResult:
    owner: int
    hops: int
    path: list[int]


class ChordRing:
    def __init__(self, sim: Simulator, ks: KeySpace, *, succ_list_len: int = 4,
                 stabilize_period: float = 5.0, audit_period: float = 0.0,
                 policy: ConsistencyPolicy | None = None):
        self.sim = sim
        self.ks = ks
        self.succ_list_len = succ_list_len
        self.stabilize_period = stabilize_period
        self.audit_period = audit_period
        self.policy = policy or ConsistencyPolicy()
        self.nodes: dict[int, ChordNode] = {}
        sim.leave_listeners.append(self._on_leave)

    # helpers

    def live(self, node: int | None) -> bool:
        return node is not None and node in self.nodes and self.sim.is_alive(node)

    def live_ids(self) -> list[int]:
        return sorted(n for n in self.nodes if self.sim.is_alive(n))

    def finger_start(self, node: int, i: int) -> int:
        """Target of the i-th finger, 1 <= i <= m_bits."""
        return self.ks.wrap(node + (1 << (i - 1)))

    def live_successor(self, node: int) -> int:
        state = self.nodes[node]
        for cand in [state.successor, *state.succ_list]:
            if cand == node or self.live(cand):
                if cand != state.successor:
                    self.sim.counters["chord.succ_failover"] += 1
                return cand
        raise LookupTimeout(f"node {node} has no live successor")

    def next_hop(self, node: int) -> int:
        """Live successor; a node still pointing at itself defers to its predecessor."""
        succ = self.live_successor(node)
        if succ == node:
            pred = self.nodes[node].predecessor
            if self.live(pred) and pred != node:
                return pred
        return succ

    def owns(self, node: int, key: int) -> bool:
        state = self.nodes[node]
        pred = state.predecessor
        if self.live(pred) and pred != node:
            return self.ks.in_open_closed(key, pred, node)
        return state.successor == node

    # construction

    @classmethod
    def quiesced(cls, sim: Simulator, ks: KeySpace, ids: Iterable[int], **kw) -> ChordRing:
        """Ring whose pointers and fingers already equal the oracle values."""
        ring = cls(sim, ks, **kw)
        ordered = sorted(set(ids))
        for node in ordered:
            sim.add_node(node)
        for idx, node in enumerate(ordered):
            succs = [ordered[(idx + j) % len(ordered)] for j in range(1, ring.succ_list_len + 1)]
            ring.nodes[node] = ChordNode(
                id=node,
                successor=succs[0],
                predecessor=ordered[idx - 1],
                finger=[successor_oracle(ordered, ring.finger_start(node, i))
                        for i in range(1, ks.m_bits + 1)],
                succ_list=succs,
            )
        return ring

    def create(self, node: int) -> ChordNode:
        """First node of a new ring."""
        self.sim.add_node(node)
        state = ChordNode(node, successor=node, finger=[node] * self.ks.m_bits, succ_list=[node])
        self.nodes[node] = state
        return state

    def join(self, node: int, via: int | None) -> ChordNode:
        """Join through ``via``; ``None`` creates a ring of one."""
        if via is None:
            return self.create(node)
        if not self.live(via):
            raise JoinFailed(f"entry node {via} unreachable")
        succ = self.lookup_scalable(via, node, record=False).owner
        self.sim.add_node(node)
        state = ChordNode(node, successor=succ, finger=[succ] * self.ks.m_bits, succ_list=[succ])
        self.nodes[node] = state
        self.notify(succ, node)
        return state

    def rejoin(self, node: int, via: int) -> ChordNode:
        """A returning node starts over with empty routing state and store."""
        self.nodes.pop(node, None)
        if not self.live(via):
            raise JoinFailed(f"entry node {via} unreachable")
        succ = self.lookup_scalable(via, node, record=False).owner
        state = ChordNode(node, successor=succ, finger=[succ] * self.ks.m_bits, succ_list=[succ])
        self.nodes[node] = state
        self.notify(succ, node)
        return state

    # maintenance

    def stabilize(self, node: int) -> None:
        state = self.nodes[node]
        if state.predecessor is not None and not self.live(state.predecessor):
            state.predecessor = None
        try:
            succ = self.live_successor(node)
        except LookupTimeout:
            succ = node
        if succ == node:
            # alone, or everybody we knew has gone: adopt our predecessor if any
            if state.predecessor is not None and state.predecessor != node:
                succ = state.predecessor
        else:
            # follow the predecessor chain back towards us in one round
            x = self.nodes[succ].predecessor
            while self.live(x) and self.ks.in_open(x, node, succ):
                succ = x
                x = self.nodes[succ].predecessor
        state.successor = succ
        state.finger[0] = succ
        if succ != node:
            self.notify(succ, node)
            tail = [s for s in self.nodes[succ].succ_list if s != node]
            state.succ_list = ([succ] + tail)[: self.succ_list_len]
        else:
            state.succ_list = [node]

    def notify(self, node: int, candidate: int) -> None:
        """``candidate`` thinks it might be ``node``'s predecessor."""
        state = self.nodes[node]
        pred = state.predecessor
        if pred is None or not self.live(pred) or pred == node or self.ks.in_open(candidate, pred, node):
            if candidate == node:
                return
            state.predecessor = candidate
            self._hand_over(node, candidate)

    def _hand_over(self, node: int, new_pred: int) -> None:
        """Move stored keys outside (new_pred, node] to the new predecessor."""
        held = self.nodes[node].store.held
        moving = [k for k in held if not self.ks.in_open_closed(k, new_pred, node)]
        target = self.nodes[new_pred].store
        for k in moving:
            for d in held.pop(k).values():
                target.store(d)

    def fix_finger(self, node: int, i: int | None = None) -> None:
        """Refresh finger ``i`` (1-based); a random index when ``i`` is None."""
        if i is None:
            i = self.sim.rng(f"chord.fix:{node}").randrange(1, self.ks.m_bits + 1)
        try:
            owner = self.lookup_scalable(node, self.finger_start(node, i), record=False).owner
        except LookupTimeout:
            return
        self.nodes[node].finger[i - 1] = owner

    def start_maintenance(self, node: int) -> None:
        rng = self.sim.rng(f"chord.phase:{node}")
        self.sim.set_timer(rng.uniform(0, self.stabilize_period), node, "chord.tick",
                           lambda: self._tick(node))
        if self.audit_period > 0:
            self.sim.set_timer(rng.uniform(0, self.audit_period), node, "chord.audit",
                               lambda: self._audit(node))

    def _tick(self, node: int) -> None:
        self.stabilize(node)
        self.fix_finger(node)
        self._expire(node)
        self.sim.set_timer(self.stabilize_period, node, "chord.tick", lambda: self._tick(node))

    def _expire(self, node: int) -> None:
        consistency_tick(ConsistencyPolicy(), self.nodes[node].store, self.sim.now)

    def _audit(self, node: int) -> None:
        """Ask a finger to look up our own id; a wrong answer flags an inconsistent ring."""
        fingers = sorted({f for f in self.nodes[node].finger if f != node and self.live(f)})
        if fingers:
            helper = self.sim.rng(f"chord.audit:{node}").choice(fingers)
            try:
                ok = self.lookup_scalable(helper, node, record=False).owner == node
            except LookupTimeout:
                ok = False
            self.sim.record("chord.audit_ok", node, int(ok))
        self.sim.set_timer(self.audit_period, node, "chord.audit", lambda: self._audit(node))

    def _on_leave(self, node: int) -> None:
        if node in self.nodes:
            self.nodes[node].store = DescriptorStore()

    def is_consistent(self) -> bool:
        """Successor pointers of all live nodes match the oracle."""
        ids = self.live_ids()
        return all(self.nodes[n].successor == successor_oracle(ids, self.ks.wrap(n + 1))
                   for n in ids)

    # lookups

    def _limit(self) -> int:
        return len(self.nodes) + self.ks.m_bits

    def lookup_basic(self, origin: int, key: int, *, record: bool = True) -> LookupResult:
        """Walk successor pointers until the key's owner is reached."""
        key = self.ks.wrap(key)
        if not self.live(origin):
            raise LookupTimeout(f"origin {origin} is not live")
        cur, path = origin, [origin]
        if not self.owns(cur, key):
            while True:
                nxt = self.next_hop(cur)
                if nxt == cur:
                    break
                path.append(nxt)
                if self.ks.in_open_closed(key, cur, nxt):
                    cur = nxt
                    break
                cur = nxt
                if len(path) > self._limit():
                    raise LookupTimeout(f"basic lookup for {key} exceeded hop budget")
        result = LookupResult(cur, len(path) - 1, path)
        if record:
            self.sim.record("chord.basic_hops", origin, result.hops)
        return result

    def closest_preceding(self, node: int, key: int) -> int:
        state = self.nodes[node]
        for f in reversed(state.finger):
            if self.live(f) and self.ks.in_open(f, node, key):
                return f
        return node

    def lookup_scalable(self, origin: int, key: int, *, record: bool = True) -> LookupResult:
        """Finger-table lookup: jump to the closest preceding finger each hop."""
        key = self.ks.wrap(key)
        if not self.live(origin):
            raise LookupTimeout(f"origin {origin} is not live")
        cur, path = origin, [origin]
        if not self.owns(cur, key):
            while True:
                succ = self.next_hop(cur)
                if succ == cur:
                    break
                if self.ks.in_open_closed(key, cur, succ):
                    path.append(succ)
                    cur = succ
                    break
                nxt = self.closest_preceding(cur, key)
                if nxt == cur:
                    nxt = succ
                path.append(nxt)
                cur = nxt
                if len(path) > self._limit():
                    raise LookupTimeout(f"scalable lookup for {key} exceeded hop budget")
        result = LookupResult(cur, len(path) - 1, path)
        if record:
            self.sim.record("chord.lookup_hops", origin, result.hops)
        return result

    # distributed state

    def put(self, origin: int, descriptor: Descriptor) -> LookupResult:
        """Route a PUT to successor(key); the owner executes STORE."""
        res = self.lookup_scalable(origin, descriptor.key)
        self.nodes[res.owner].store.store(descriptor)
        return res

    def get(self, origin: int, key: int) -> list[Descriptor]:
        res = self.lookup_scalable(origin, key)
        return self.nodes[res.owner].store.lookup(self.ks.wrap(key), self.sim.now)


class DsmPublisher:
    """Owner side of the push approach: publish, then republish on a timer."""

    def __init__(self, ring: ChordRing, owner: int, policy: ConsistencyPolicy):
        self.ring = ring
        self.owner = owner
        self.policy = policy
        self.store = DescriptorStore()

    def _entry(self) -> int:
        if self.ring.live(self.owner) and self.owner in self.ring.nodes:
            return self.owner
        ids = self.ring.live_ids()
        if not ids:
            raise EmptyRing("nothing to publish to")
        return ids[0]

    def publish(self, descriptor: Descriptor) -> None:
        sim = self.ring.sim
        self.store.own(descriptor)
        entry = self.store.owned[descriptor.key]
        entry.descriptor = descriptor.republished(sim.now)
        entry.last_published = sim.now
        entry.dirty = False
        self._put(entry.descriptor)
        if self.policy.mode is ConsistencyMode.DSM_REPUBLISH and len(self.store.owned) == 1:
            sim.set_timer(self.policy.republish_period, self.owner, "dsm.republish", self._tick)

    def _put(self, descriptor: Descriptor) -> None:
        sim = self.ring.sim
        try:
            self.ring.put(self._entry(), descriptor)
            sim.record("dsm.publish", self.owner, descriptor.key)
        except (LookupTimeout, EmptyRing):
            sim.counters["dsm.publish_failed"] += 1

    def _tick(self) -> None:
        sim = self.ring.sim
        for action in consistency_tick(self.policy, self.store, sim.now):
            if isinstance(action, Republish):
                self._put(action.descriptor)
        sim.set_timer(self.policy.republish_period, self.owner, "dsm.republish", self._tick)
