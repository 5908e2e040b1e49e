from __future__ import annotations

import hashlib
import math
import random

import pytest
from hypothesis import given, strategies as st

from p2ppl.core import (Descriptor, IdAllocator, KeySpace, Message, MessageIds, MessageKind,
                        content_digest, derive_key)
from p2ppl.errors import IdCollision, InvalidKeySpace


def test_sha1_known_vectors():
    assert content_digest(b"").hex() == "da39a3ee5e6b4b0d3255bfef95601890afd80709"
    assert content_digest(b"abc").hex() == "a9993e364706816aba3e25717850c26c9cd0d89d"


def test_zero_block_digest_matches_reference():
    block = bytes(16 * 1024)
    assert content_digest(block) == hashlib.new("sha1", block).digest()
    assert len(content_digest(block)) == 20


@pytest.mark.parametrize("m_bits", [1, 8, 16, 32, 64])
def test_derive_key_against_reference(m_bits):
    ks = KeySpace(m_bits)
    for body in (b"resource-a", b"resource-b", b"resource-a!"):
        ref = int(hashlib.new("sha1", body).hexdigest(), 16) % (2 ** m_bits)
        assert derive_key(body, ks) == ref


def test_derive_key_is_deterministic_and_sensitive():
    ks = KeySpace(32)
    assert derive_key(b"song.mp3", ks) == derive_key(b"song.mp3", ks)
    assert derive_key(b"song.mp3", ks) != derive_key(b"song.mp4", ks)


def test_modulo_reduction():
    # a key space of 8 bits keeps the low byte: 0x1F3 -> 0xF3
    assert KeySpace(8).wrap(0x1F3) == 0xF3


@pytest.mark.parametrize("bad", [0, 65, -3])
def test_keyspace_bounds(bad):
    with pytest.raises(InvalidKeySpace):
        KeySpace(bad)


def test_intervals_wrap_around():
    ks = KeySpace(4)  # 0..15
    assert ks.in_open_closed(0, 14, 2)
    assert ks.in_open_closed(2, 14, 2)
    assert not ks.in_open_closed(14, 14, 2)
    assert not ks.in_open_closed(5, 14, 2)
    assert ks.in_open(1, 14, 2) and not ks.in_open(2, 14, 2)
    # degenerate intervals
    assert all(ks.in_open_closed(x, 3, 3) for x in range(16))
    assert [x for x in range(16) if not ks.in_open(x, 3, 3)] == [3]


@given(st.integers(1, 12), st.data())
def test_interval_matches_brute_force(m_bits, data):
    ks = KeySpace(m_bits)
    a = data.draw(st.integers(0, ks.size - 1))
    b = data.draw(st.integers(0, ks.size - 1))
    x = data.draw(st.integers(0, ks.size - 1))
    # walk clockwise from a to b
    steps = (b - a) % ks.size or ks.size
    members = {(a + i) % ks.size for i in range(1, steps + 1)}
    assert ks.in_open_closed(x, a, b) == (x in members)


def test_descriptor_expiry():
    d = Descriptor(key=5, owner=1, content_digest=b"\0" * 20, published_at=10.0, lifetime=60.0)
    assert not d.expired(69.999)
    assert d.expired(70.0)
    assert d.expires_at == 70.0
    forever = Descriptor(5, 1, b"\0" * 20, 10.0)
    assert not forever.expired(1e12)
    assert math.isinf(forever.expires_at)
    assert d.republished(50.0).expires_at == 110.0


def test_descriptor_for_body():
    ks = KeySpace(16)
    d = Descriptor.for_body(b"doc", owner=7, ks=ks, published_at=3.0, content=b"payload")
    assert d.key == derive_key(b"doc", ks)
    assert d.content_digest == hashlib.sha1(b"payload").digest()
    assert d.owner == 7 and d.published_at == 3.0


def test_forwarded_message_keeps_identity():
    m = Message(42, MessageKind.QUERY, src=1, ttl=3, payload={"k": 1})
    f = m.forwarded(2, 2)
    assert f.msg_id == 42 and f.src == 2 and f.ttl == 2 and f.payload == {"k": 1}


def test_message_ids_are_unique():
    ids = MessageIds()
    seen = [ids.next() for _ in range(1000)]
    assert len(set(seen)) == 1000


def test_id_allocator_unique_and_exhaustion():
    alloc = IdAllocator(KeySpace(4), random.Random(1))
    got = [alloc.fresh() for _ in range(16)]
    assert sorted(got) == list(range(16))
    with pytest.raises(IdCollision):
        alloc.fresh()


def test_id_allocator_claim():
    alloc = IdAllocator(KeySpace(8), random.Random(1))
    alloc.claim(10)
    with pytest.raises(IdCollision):
        alloc.claim(10)
    with pytest.raises(IdCollision):
        alloc.claim(256)
