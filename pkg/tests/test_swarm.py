from __future__ import annotations

import hashlib
import random
from collections import Counter

import pytest
from hypothesis import given, settings, strategies as st

from p2ppl.engine import Simulator
from p2ppl.errors import (AmbiguousVersion, CorruptPiece, InsufficientPeers, InvalidParams,
                          NothingWanted)
from p2ppl.swarm import (ChokeScheduler, ChokeState, ContentSpec, PieceMap, ReplicaSet, Swarm,
                         SwarmConfig, choke_round_optimistic, choke_round_regular,
                         majority_version, random_pick, rarest_first_pick, replicate_active,
                         split_pieces, verify_piece)

KiB = 1024
A, B, C, D, E, F = range(1, 7)
RATES = {A: 100, B: 50, C: 80, D: 10, E: 60, F: 70}


def small_cfg(**kw):
    base = dict(total_size=2 << 20, leecher_count=6, freerider_count=0, join_spread_s=20.0,
                duration_s=3000.0)
    base.update(kw)
    return SwarmConfig(**base)


# content

def test_content_spec_geometry():
    data = bytes(600 * KiB)
    spec = ContentSpec.from_data(data)
    assert spec.num_pieces == 3
    assert spec.piece_length(2) == 88 * KiB
    assert spec.blocks_in_piece(2) == 6
    assert spec.block_length(2, 5) == 8 * KiB
    assert spec.piece_digests[0] == hashlib.sha1(bytes(256 * KiB)).digest()
    with pytest.raises(InvalidParams):
        ContentSpec(10, (b"",), piece_size=100, block_size=30)
    with pytest.raises(InvalidParams):
        ContentSpec(10, (), piece_size=100, block_size=10)


def test_verify_piece_detects_bit_flip():
    data = random.Random(1).randbytes(512 * KiB)
    spec = ContentSpec.from_data(data)
    pieces = split_pieces(data, spec.piece_size)
    assert verify_piece(pieces[1], spec, 1)
    flipped = bytearray(pieces[1])
    flipped[1000] ^= 0x10
    with pytest.raises(CorruptPiece):
        verify_piece(bytes(flipped), spec, 1)


def test_majority_version():
    assert majority_version([(b"h1", 40), (b"h2", 3)]) == b"h1"
    assert majority_version([(b"only", 1)]) == b"only"
    with pytest.raises(AmbiguousVersion):
        majority_version([(b"h1", 5), (b"h2", 5)])
    with pytest.raises(ValueError):
        majority_version([])


# piece selection

def test_rarest_example():
    avail = {0: 3, 1: 1, 2: 1, 3: 2}
    for s in range(20):
        assert rarest_first_pick(avail, {0, 1, 3}, random.Random(s)) == 1


@settings(max_examples=50)
@given(st.dictionaries(st.integers(0, 30), st.integers(0, 6), min_size=1), st.data())
def test_rarest_matches_brute_minimum(avail, data):
    wanted = data.draw(st.sets(st.sampled_from(sorted(avail))))
    cands = [p for p in wanted if avail[p] > 0]
    if not cands:
        with pytest.raises(NothingWanted):
            rarest_first_pick(avail, wanted, random.Random(0))
        return
    low = min(avail[p] for p in cands)
    got = rarest_first_pick(avail, wanted, random.Random(data.draw(st.integers(0, 99))))
    assert got in cands and avail[got] == low


def test_equal_counts_are_uniform():
    rng = random.Random(5)
    avail = {p: 4 for p in range(10)}
    draws = Counter(rarest_first_pick(avail, set(avail), rng) for _ in range(10_000))
    expected = 1000
    chi2 = sum((draws[p] - expected) ** 2 / expected for p in range(10))
    assert chi2 < 21.666  # df=9, p=0.01


def test_available_restriction_and_nothing_wanted():
    avail = {0: 1, 1: 5}
    assert rarest_first_pick(avail, {0, 1}, random.Random(0), available={1}) == 1
    with pytest.raises(NothingWanted):
        rarest_first_pick(avail, {0}, random.Random(0), available={1})
    with pytest.raises(NothingWanted):
        random_pick(set(), random.Random(0))


def test_piece_map_updates_rarest_set():
    pm = PieceMap(4)
    pm.set_bitfield(1, {0, 1, 2})
    pm.set_bitfield(2, {0, 1})
    assert pm.rarest({0, 1, 2, 3}) == [2]
    pm.add(3, 2)
    pm.add(3, 3)
    assert pm.rarest({0, 1, 2, 3}) == [3]
    pm.remove_peer(1)
    assert pm.availability == Counter({0: 1, 1: 1, 2: 1, 3: 1})
    assert not pm.add(3, 3)


# choking

def test_regular_round_example():
    cs = ChokeState(interested=set(RATES), rates=dict(RATES))
    assert choke_round_regular(cs) == {A, C, F, E}
    picks = Counter(next(iter(choke_round_optimistic(cs, random.Random(s)))) for s in range(400))
    assert set(picks) == {B, D}
    assert min(picks.values()) > 150


def test_regular_round_edge_cases():
    cs = ChokeState(interested={A, B}, rates={A: 5, B: 1, C: 1000})
    assert choke_round_regular(cs) == {A, B}
    cs = ChokeState(interested={A, B, C, D, E, F} - {A}, rates=dict(RATES))
    assert A not in choke_round_regular(cs)
    cs = ChokeState(interested={1, 2, 3, 4, 5, 6}, rates={})
    assert choke_round_regular(cs) == {1, 2, 3, 4}


def test_optimistic_noop_when_everyone_regular():
    cs = ChokeState(interested={A, B}, rates={A: 1, B: 2})
    choke_round_regular(cs)
    assert choke_round_optimistic(cs, random.Random(0)) == set()


def test_newcomer_without_pieces_is_eligible():
    cs = ChokeState(interested={A, B, C, D, E, 99}, rates={A: 9, B: 9, C: 9, D: 9, E: 9})
    choke_round_regular(cs)
    assert choke_round_optimistic(cs, random.Random(0)) <= {E, 99}
    seen = {next(iter(choke_round_optimistic(cs, random.Random(s)))) for s in range(50)}
    assert 99 in seen


def test_choke_params_validated():
    with pytest.raises(InvalidParams):
        ChokeState(M=2, K=3)
    with pytest.raises(InvalidParams):
        ChokeState(T1=0)


@settings(max_examples=30, deadline=None)
@given(st.dictionaries(st.integers(0, 40), st.floats(0, 1000), max_size=25),
       st.integers(1, 8), st.data())
def test_scheduler_never_exceeds_m(rates, m, data):
    k = data.draw(st.integers(0, m))
    sim = Simulator(1)
    cs = ChokeState(M=m, K=k, interested=set(rates), rates=dict(rates))
    rng = random.Random(data.draw(st.integers(0, 99)))

    def churn_interest(state):
        state.interested = {p for p in rates if rng.random() < 0.7}

    sched = ChokeScheduler(sim, 0, cs, rng, refresh=churn_interest)
    sched.start()
    sim.run_until(200)
    assert all(len(s) <= m for _, _, s in sched.history)
    assert sched.regular_rounds == 20 and sched.optimistic_rounds == 6


# replication

def test_replicate_active():
    holders = {1}
    placed = replicate_active(holders, range(11), 3, random.Random(0))
    assert len(placed) == 3 and 1 not in placed and len(holders) == 4
    with pytest.raises(InsufficientPeers):
        replicate_active({1, 2}, [1, 2, 3], 2, random.Random(0))


def test_replica_repair_after_churn():
    sim = Simulator(3)
    for n in range(10):
        sim.add_node(n)
    rs = ReplicaSet(sim, key=7, population=range(10), k_target=3, repair_period=30.0)
    rs.start()
    sim.run_until(1.0)
    assert rs.live_count() == 3
    victims = sorted(rs.holders)[:2]
    for v in victims:
        sim.leave_at(5.0, v)
    sim.run_until(10.0)
    assert rs.live_count() == 1
    sim.run_until(31.0)
    assert rs.live_count() == 3
    assert not set(victims) & rs.holders


# whole swarm

def test_small_swarm_completes_with_verified_data():
    sim = Simulator(4)
    swarm = Swarm(sim, small_cfg())
    res = swarm.run()
    assert res.unfinished == 0 and res.corrupt_pieces == 0
    assert len(res.completion["contributor"]) == 6
    for p in swarm.peers.values():
        if p.role == "contributor":
            assert hashlib.sha1(b"".join(p.data[i] for i in range(swarm.spec.num_pieces))).digest() \
                == swarm.file_digest


def test_unchoked_never_exceeds_m_in_swarm():
    sim = Simulator(6)
    swarm = Swarm(sim, small_cfg(M=3, K=1))
    swarm.run()
    for p in swarm.peers.values():
        if p.scheduler is not None:
            assert all(len(s) <= 3 for _, _, s in p.scheduler.history)


def test_poisoned_pieces_are_redownloaded():
    sim = Simulator(2)
    swarm = Swarm(sim, small_cfg(poisoner_count=1))
    res = swarm.run()
    assert res.corrupt_pieces > 0
    assert res.unfinished == 0
    poisoner = next(p.id for p in swarm.peers.values() if p.role == "poisoner")
    assert any(poisoner in p.banned for p in swarm.peers.values())


def test_rfa_and_random_both_finish():
    for mode in ("rarest", "random"):
        res = Swarm(Simulator(9), small_cfg(piece_selection=mode)).run()
        assert res.unfinished == 0
        assert res.variance_at_half is not None


def test_swarm_config_validation():
    with pytest.raises(InvalidParams):
        SwarmConfig(piece_selection="newest")
    with pytest.raises(InvalidParams):
        SwarmConfig(piece_size=1000, block_size=300)


def test_swarm_is_deterministic():
    def once():
        sim = Simulator(11)
        Swarm(sim, small_cfg(freerider_count=1)).run()
        return sim.log.dumps()
    assert once() == once()
