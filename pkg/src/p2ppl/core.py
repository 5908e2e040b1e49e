"""Identifier spaces, resource descriptors and message envelopes.

Every overlay in the package names peers and resources with integers drawn
from one circular key space of ``m_bits`` bits.  Resource keys and content
digests are SHA-1 based so that runs are bit-exact across machines.
"""

from __future__ import annotations

import enum
import hashlib
import itertools
import math
import random
from dataclasses import dataclass, field, replace
from typing import Any, NewType

from .errors import IdCollision, InvalidKeySpace

NodeId = NewType("NodeId", int)
ResourceKey = NewType("ResourceKey", int)

MAX_BITS = 64


@dataclass(frozen=True)
class KeySpace:
    m_bits: int

    def __post_init__(self):
        if not isinstance(self.m_bits, int) or not 1 <= self.m_bits <= MAX_BITS:
            raise InvalidKeySpace(f"m_bits must be in [1, {MAX_BITS}], got {self.m_bits!r}")

    @property
    def size(self) -> int:
        return 1 << self.m_bits

    def wrap(self, value: int) -> int:
        return value % self.size

    def contains(self, value: int) -> bool:
        return 0 <= value < self.size

    def distance(self, a: int, b: int) -> int:
        """Clockwise distance from ``a`` to ``b``."""
        return (b - a) % self.size

    def in_open_closed(self, x: int, a: int, b: int) -> bool:
        """True if ``x`` lies in the ring interval (a, b].

        When ``a == b`` the interval is the whole ring.
        """
        if a == b:
            return True
        return 0 < self.distance(a, x) <= self.distance(a, b)

    def in_open(self, x: int, a: int, b: int) -> bool:
        """True if ``x`` lies in the ring interval (a, b); (a, a) is the ring minus a."""
        if a == b:
            return x != a
        return 0 < self.distance(a, x) < self.distance(a, b)


def content_digest(data: bytes) -> bytes:
    """160-bit SHA-1 digest of ``data``."""
    return hashlib.sha1(data).digest()


def derive_key(body: bytes, ks: KeySpace) -> ResourceKey:
    """Resource key: SHA-1 of the descriptor body reduced modulo 2**m_bits."""
    return ResourceKey(int.from_bytes(content_digest(body), "big") % ks.size)


@dataclass(frozen=True)
class Descriptor:
    key: int
    owner: int
    content_digest: bytes
    published_at: float
    lifetime: float = math.inf
    version: int = 0

    def expired(self, t: float) -> bool:
        return math.isfinite(self.lifetime) and t >= self.published_at + self.lifetime

    @property
    def expires_at(self) -> float:
        return self.published_at + self.lifetime

    def republished(self, t: float) -> Descriptor:
        return replace(self, published_at=t)

    @classmethod
    def for_body(cls, body: bytes, owner: int, ks: KeySpace, *, published_at: float = 0.0,
                 lifetime: float = math.inf, content: bytes | None = None) -> Descriptor:
        """Build a descriptor whose key is derived from ``body``.

        ``content`` is the resource payload; its digest defaults to the body's.
        """
        digest = content_digest(body if content is None else content)
        return cls(derive_key(body, ks), owner, digest, published_at, lifetime)


class MessageKind(enum.Enum):
    PING = "PING"
    PONG = "PONG"
    QUERY = "QUERY"
    QUERY_HIT = "QUERY_HIT"
    PUT = "PUT"
    STORE = "STORE"
    GET = "GET"
    LOOKUP = "LOOKUP"
    NOTIFY = "NOTIFY"
    CHUNK_REQUEST = "CHUNK_REQUEST"
    CHUNK_DATA = "CHUNK_DATA"
    PROBE = "PROBE"
    CONTROL = "CONTROL"


@dataclass(frozen=True)
class Message:
    msg_id: int
    kind: MessageKind
    src: int
    ttl: int | None = None
    group_tag: int | None = None
    payload: Any = field(default=None, compare=False)

    def forwarded(self, src: int, ttl: int | None) -> Message:
        """Relay copy: same msg_id, new sender and TTL."""
        return replace(self, src=src, ttl=ttl)


class MessageIds:
    """Monotone 64-bit message-id source; one per simulation."""

    def __init__(self, start: int = 1):
        self._counter = itertools.count(start)

    def next(self) -> int:
        value = next(self._counter)
        if value >= 1 << 64:
            raise OverflowError("message id space exhausted")
        return value


class IdAllocator:
    """Hands out unique node ids in a key space by rejection sampling."""

    def __init__(self, ks: KeySpace, rng: random.Random):
        self.ks = ks
        self.rng = rng
        self.assigned: set[int] = set()

    def fresh(self) -> NodeId:
        if len(self.assigned) >= self.ks.size:
            raise IdCollision("key space exhausted")
        while True:
            candidate = self.rng.getrandbits(self.ks.m_bits)
            if candidate not in self.assigned:
                self.assigned.add(candidate)
                return NodeId(candidate)

    def claim(self, value: int) -> NodeId:
        if not self.ks.contains(value):
            raise IdCollision(f"id {value} outside key space")
        if value in self.assigned:
            raise IdCollision(f"id {value} already assigned")
        self.assigned.add(value)
        return NodeId(value)
