"""Hybrid overlay actors: an eMule-style index server and a BitTorrent-style tracker.

Both are single actors on the simulator.  Searching and announcing are
answered from their in-memory registries; data moves peer to peer.
"""

from __future__ import annotations

import random
from collections import Counter
from dataclasses import dataclass, field
from typing import Iterable

from .core import Descriptor, Message, MessageKind
from .errors import NotRegistered, UnknownTorrent


@dataclass
class IndexServer:
    node_id: int = -1
    offer_limit: int = 200
    registered: set[int] = field(default_factory=set)
    # key -> provider -> descriptor offered by that provider
    catalog: dict[int, dict[int, Descriptor]] = field(default_factory=dict)
    offers: dict[int, dict[int, Descriptor]] = field(default_factory=dict)
    counters: Counter = field(default_factory=Counter)

    def attach(self, sim) -> None:
        """Host the server on ``sim`` and drop providers when they leave."""
        sim.add_node(self.node_id, self.handle)
        sim.leave_listeners.append(self.unregister)

    def register(self, peer: int) -> None:
        self.registered.add(peer)

    def unregister(self, peer: int) -> None:
        self.registered.discard(peer)
        self._withdraw(peer)

    def _withdraw(self, peer: int) -> None:
        for key in self.offers.pop(peer, {}):
            providers = self.catalog.get(key)
            if providers is not None:
                providers.pop(peer, None)
                if not providers:
                    del self.catalog[key]

    def offer_files(self, peer: int, descriptors: Iterable[Descriptor]) -> int:
        """Replace ``peer``'s shared list; at most ``offer_limit`` entries are kept."""
        if peer not in self.registered:
            raise NotRegistered(f"peer {peer} is not connected to the index server")
        descriptors = list(descriptors)
        accepted = descriptors[: self.offer_limit]
        self.counters["offers_rejected"] += len(descriptors) - len(accepted)
        self._withdraw(peer)
        mine = self.offers[peer] = {}
        for d in accepted:
            mine[d.key] = d
            self.catalog.setdefault(d.key, {})[peer] = d
        return len(accepted)

    def update(self, peer: int, descriptor: Descriptor) -> None:
        """Apply a single changed descriptor (owner notification)."""
        if peer not in self.registered:
            raise NotRegistered(f"peer {peer} is not connected to the index server")
        self.offers.setdefault(peer, {})[descriptor.key] = descriptor
        self.catalog.setdefault(descriptor.key, {})[peer] = descriptor

    def server_search(self, query: int | bytes) -> list[int]:
        """Registered providers of a key (int) or content digest (bytes)."""
        return [p for p, _ in self.search_descriptors(query)]

    def search_descriptors(self, query: int | bytes) -> list[tuple[int, Descriptor]]:
        if isinstance(query, bytes):
            hits = [(p, d) for providers in self.catalog.values()
                    for p, d in providers.items() if d.content_digest == query]
        else:
            hits = list(self.catalog.get(query, {}).items())
        return sorted((p, d) for p, d in hits if p in self.registered)

    def describe(self, key: int, provider: int) -> Descriptor | None:
        return self.catalog.get(key, {}).get(provider)

    def handle(self, msg: Message) -> None:
        if msg.kind is MessageKind.NOTIFY:
            try:
                self.update(msg.src, msg.payload)
            except NotRegistered:
                self.counters["notify_unregistered"] += 1


@dataclass
class Tracker:
    handout: int = 20
    timeout: float = float("inf")
    torrents: dict[bytes, set[int]] = field(default_factory=dict)
    last_announce: dict[tuple[bytes, int], float] = field(default_factory=dict)
    counters: Counter = field(default_factory=Counter)

    def attach(self, sim) -> None:
        sim.leave_listeners.append(self.depart)

    def publish(self, digest: bytes) -> None:
        self.torrents.setdefault(digest, set())

    def announce(self, peer: int, digest: bytes, rng: random.Random, now: float = 0.0) -> list[int]:
        """Register ``peer`` in the swarm and hand out other current members."""
        swarm = self.torrents.get(digest)
        if swarm is None:
            raise UnknownTorrent(digest.hex())
        others = sorted(swarm - {peer})
        picked = rng.sample(others, min(self.handout, len(others)))
        if peer not in swarm:
            self.counters["announces"] += 1
        swarm.add(peer)
        self.last_announce[(digest, peer)] = now
        return picked

    def depart(self, peer: int) -> None:
        for digest, swarm in self.torrents.items():
            if peer in swarm:
                swarm.discard(peer)
                self.last_announce.pop((digest, peer), None)
                self.counters["departures"] += 1

    def expire(self, now: float) -> list[tuple[bytes, int]]:
        """Drop peers that have not re-announced within ``timeout``."""
        stale = [(d, p) for (d, p), t in sorted(self.last_announce.items()) if now - t > self.timeout]
        for digest, peer in stale:
            self.torrents[digest].discard(peer)
            del self.last_announce[(digest, peer)]
            self.counters["departures"] += 1
        return stale

    def swarm(self, digest: bytes) -> set[int]:
        if digest not in self.torrents:
            raise UnknownTorrent(digest.hex())
        return set(self.torrents[digest])
