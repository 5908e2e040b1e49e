from __future__ import annotations

import math
import random
import statistics

import pytest
from hypothesis import given, settings, strategies as st

from p2ppl.chord import ChordRing, DsmPublisher, successor_oracle
from p2ppl.core import Descriptor, KeySpace
from p2ppl.engine import Simulator
from p2ppl.errors import EmptyRing, JoinFailed
from p2ppl.membership import ConsistencyMode, ConsistencyPolicy


def brute_successor(ids, key, size):
    # scan clockwise from key until a node id is hit
    for step in range(size):
        if (key + step) % size in ids:
            return (key + step) % size
    raise AssertionError


def random_ring(n, m, seed, **kw):
    ks = KeySpace(m)
    ids = random.Random(seed).sample(range(ks.size), n)
    sim = Simulator(seed)
    return sim, ChordRing.quiesced(sim, ks, ids, **kw), sorted(ids)


def test_oracle_examples():
    assert successor_oracle([0, 1, 3], 2) == 3
    assert successor_oracle([0, 1, 3], 3) == 3
    assert successor_oracle([0, 1, 3], 6) == 0
    assert successor_oracle([5], 123) == 5
    with pytest.raises(EmptyRing):
        successor_oracle([], 1)


@given(st.integers(1, 10), st.data())
def test_oracle_matches_brute_force(m, data):
    size = 1 << m
    ids = sorted(data.draw(st.sets(st.integers(0, size - 1), min_size=1)))
    key = data.draw(st.integers(0, size - 1))
    assert successor_oracle(ids, key) == brute_successor(set(ids), key, size)


def test_small_ring_wrap_owned_by_origin():
    sim = Simulator(0)
    ring = ChordRing.quiesced(sim, KeySpace(3), [0, 1, 3])
    res = ring.lookup_scalable(0, 6)
    assert res.owner == 0 and res.hops == 0
    assert ring.lookup_scalable(1, 6).owner == 0


def test_key_in_first_successor_interval_is_one_hop():
    sim, ring, ids = random_ring(40, 12, 3)
    n, succ = ids[5], ids[6]
    assert ring.lookup_scalable(n, succ).hops == 1


@pytest.mark.parametrize("m,n", [(6, 10), (8, 30), (10, 64)])
def test_exhaustive_agreement(m, n):
    sim, ring, ids = random_ring(n, m, m)
    origins = ids[:: max(1, n // 8)]
    for key in range(1 << m):
        want = brute_successor(set(ids), key, 1 << m)
        for o in origins:
            assert ring.lookup_basic(o, key, record=False).owner == want
            res = ring.lookup_scalable(o, key, record=False)
            assert res.owner == want
            assert res.hops <= m


def test_basic_lookup_walks_the_arc():
    sim, ring, ids = random_ring(20, 10, 1)
    origin = ids[0]
    assert ring.lookup_basic(origin, ids[4]).hops == 4
    assert ring.lookup_basic(origin, origin).hops == 0


def test_basic_mean_hops_about_half_ring():
    sim, ring, ids = random_ring(128, 16, 6)
    rng = random.Random(6)
    hops = [ring.lookup_basic(rng.choice(ids), rng.randrange(1 << 16)).hops for _ in range(1000)]
    assert statistics.fmean(hops) == pytest.approx(64, rel=0.15)


def test_scalable_hops_logarithmic():
    sim, ring, ids = random_ring(256, 16, 2)
    rng = random.Random(2)
    hops = [ring.lookup_scalable(rng.choice(ids), rng.randrange(1 << 16)).hops for _ in range(1000)]
    assert statistics.fmean(hops) <= math.log2(256) + 1
    assert max(hops) <= 16


@settings(max_examples=20, deadline=None)
@given(st.integers(2, 80), st.integers(0, 10_000))
def test_each_finger_hop_halves_remaining_distance(n, seed):
    sim, ring, ids = random_ring(n, 12, seed)
    ks = ring.ks
    rng = random.Random(seed)
    for _ in range(20):
        key = rng.randrange(ks.size)
        res = ring.lookup_scalable(rng.choice(ids), key, record=False)
        pred = ids[ids.index(res.owner) - 1]
        # distance to the key's predecessor halves on every hop before the owner
        for a, b in zip(res.path, res.path[1:-1]):
            assert ks.distance(b, pred) <= ks.distance(a, pred) / 2


def test_join_via_entry():
    sim = Simulator(0)
    ring = ChordRing(sim, KeySpace(3))
    first = ring.join(0, None)
    assert first.successor == 0 and first.predecessor is None
    ring.join(3, 0)
    ring.stabilize(0)
    assert (ring.nodes[0].successor, ring.nodes[3].predecessor) == (3, 0)
    ring.join(1, 0)
    assert ring.nodes[1].successor == 3
    assert ring.nodes[1].predecessor is None


def test_join_via_dead_entry_fails():
    sim = Simulator(0)
    ring = ChordRing(sim, KeySpace(4))
    ring.join(2, None)
    ring.join(9, 2)
    sim.leave_at(0.5, 2)
    sim.run_until(1)
    with pytest.raises(JoinFailed):
        ring.join(5, 2)


def test_three_step_join_narrative():
    sim = Simulator(0)
    ring = ChordRing.quiesced(sim, KeySpace(6), [10, 40])
    ring.join(25, 10)
    assert ring.nodes[25].successor == 40
    assert ring.nodes[40].predecessor == 25
    ring.stabilize(10)
    assert ring.nodes[10].successor == 25
    assert ring.nodes[25].predecessor == 10
    assert ring.is_consistent()


def test_stabilize_is_noop_when_quiesced():
    sim, ring, ids = random_ring(30, 10, 4)
    before = {n: (s.successor, s.predecessor, list(s.succ_list)) for n, s in ring.nodes.items()}
    for n in ids:
        ring.stabilize(n)
    assert before == {n: (s.successor, s.predecessor, list(s.succ_list)) for n, s in ring.nodes.items()}


def test_random_order_joins_converge():
    sim = Simulator(12)
    ring = ChordRing(sim, KeySpace(16), stabilize_period=5.0)
    rng = random.Random(12)
    ids = rng.sample(range(1 << 16), 64)
    ring.join(ids[0], None)
    ring.start_maintenance(ids[0])
    for i, node in enumerate(ids[1:], 1):
        def go(node=node):
            ring.join(node, rng.choice(ring.live_ids()))
            ring.start_maintenance(node)
        sim.call_at(i * 0.5, go)
    sim.run_until(300)
    assert ring.is_consistent()


def test_put_get_round_trip_and_set_semantics():
    sim, ring, ids = random_ring(50, 16, 8)
    a = Descriptor(1234, ids[3], b"\x01" * 20, 0.0)
    b = Descriptor(1234, ids[9], b"\x02" * 20, 0.0)
    ring.put(ids[0], a)
    ring.put(ids[20], b)
    assert set(ring.get(ids[40], 1234)) == {a, b}
    assert ring.get(ids[40], 999) == []


def test_data_lost_when_holder_departs_without_republish():
    sim, ring, ids = random_ring(30, 10, 9)
    key = 500
    ring.put(ids[0], Descriptor(key, ids[1], b"\x01" * 20, 0.0))
    holder = successor_oracle(ids, key)
    sim.leave_at(1.0, holder)
    for n in ids:
        if n != holder:
            ring.start_maintenance(n)
    sim.run_until(60)
    origin = next(n for n in ids if n != holder)
    assert ring.get(origin, key) == []


def test_republish_restores_after_holder_churn():
    sim, ring, ids = random_ring(30, 10, 9)
    key = 500
    holder = successor_oracle(ids, key)
    owner = next(n for n in ids if n != holder)
    pub = DsmPublisher(ring, owner, ConsistencyPolicy(ConsistencyMode.DSM_REPUBLISH, 60.0, 20.0))
    pub.publish(Descriptor(key, owner, b"\x01" * 20, 0.0, 60.0))
    sim.leave_at(1.0, holder)
    for n in ids:
        ring.start_maintenance(n)
    sim.run_until(90)
    assert [d.owner for d in ring.get(owner, key)] == [owner]
