from __future__ import annotations

import random

import pytest

from p2ppl.core import Descriptor
from p2ppl.engine import Simulator
from p2ppl.errors import NotRegistered, UnknownTorrent
from p2ppl.hybrid import IndexServer, Tracker


def descs(owner, n, version=0):
    return [Descriptor(k, owner, bytes([k % 256]) * 20, 0.0, version=version) for k in range(n)]


def test_offer_limit():
    srv = IndexServer(offer_limit=200)
    srv.register(1)
    assert srv.offer_files(1, descs(1, 250)) == 200
    assert srv.counters["offers_rejected"] == 50
    assert len(srv.offers[1]) == 200


def test_reoffer_replaces_and_is_idempotent():
    srv = IndexServer()
    srv.register(1)
    srv.offer_files(1, descs(1, 5))
    before = {k: dict(v) for k, v in srv.catalog.items()}
    srv.offer_files(1, descs(1, 5))
    assert srv.catalog == before
    srv.offer_files(1, descs(1, 3, version=2))
    assert sorted(srv.catalog) == [0, 1, 2]
    assert srv.describe(2, 1).version == 2


def test_unregistered_offer():
    with pytest.raises(NotRegistered):
        IndexServer().offer_files(9, descs(9, 1))
    with pytest.raises(NotRegistered):
        IndexServer().update(9, descs(9, 1)[0])


def test_search_by_key_and_digest():
    srv = IndexServer()
    for p in (3, 1):
        srv.register(p)
        srv.offer_files(p, descs(p, 2))
    assert srv.server_search(1) == [1, 3]
    assert srv.server_search(bytes([1]) * 20) == [1, 3]
    assert srv.server_search(77) == []


def test_departed_provider_excluded():
    sim = Simulator(0)
    srv = IndexServer(node_id=1000)
    srv.attach(sim)
    for p in (1, 2):
        sim.add_node(p)
        srv.register(p)
        srv.offer_files(p, descs(p, 1))
    sim.leave_at(1.0, 2)
    sim.run_until(2.0)
    assert srv.server_search(0) == [1]
    assert all(sim.is_alive(p) for p in srv.server_search(0))


def test_no_federation_between_servers():
    a, b = IndexServer(node_id=-1), IndexServer(node_id=-2)
    a.register(1)
    a.offer_files(1, descs(1, 1))
    b.register(2)
    assert b.server_search(0) == []


def test_tracker_handout():
    tr = Tracker(handout=20)
    digest = b"\x07" * 20
    tr.publish(digest)
    rng = random.Random(1)
    assert tr.announce(0, digest, rng) == []
    for p in range(1, 30):
        tr.announce(p, digest, rng)
    got = tr.announce(30, digest, rng)
    assert len(got) == len(set(got)) == 20
    assert 30 not in got and set(got) <= set(range(30))


def test_tracker_unknown_digest():
    with pytest.raises(UnknownTorrent):
        Tracker().announce(1, b"\x00" * 20, random.Random(0))


def test_swarm_conservation():
    sim = Simulator(2)
    tr = Tracker(handout=5, timeout=100.0)
    tr.attach(sim)
    digest = b"\x01" * 20
    tr.publish(digest)
    rng = random.Random(2)
    for p in range(12):
        sim.add_node(p)
        tr.announce(p, digest, rng, now=0.0)
        tr.announce(p, digest, rng, now=0.0)  # re-announce is not a new member
    for p in (3, 4, 5):
        sim.leave_at(1.0, p)
    sim.run_until(2.0)
    assert len(tr.swarm(digest)) == tr.counters["announces"] - tr.counters["departures"] == 9
    tr.announce(0, digest, rng, now=150.0)
    expired = tr.expire(150.0)
    assert len(expired) == 8
    assert tr.swarm(digest) == {0}
    assert len(tr.swarm(digest)) == tr.counters["announces"] - tr.counters["departures"]
