"""Bootstrapping, group membership and descriptor consistency policies."""

from __future__ import annotations

import enum
import math
import random
from dataclasses import dataclass, field
from typing import Callable, Iterable

from .core import Descriptor, Message
from .errors import AlreadyMember, BootstrapFailed, InvalidParams, MediatorUnavailable


# bootstrapping

@dataclass
class PeerCache:
    """Previously seen peers, most recent first."""

    capacity: int = 32
    entries: list[tuple[int, float]] = field(default_factory=list)

    def __post_init__(self):
        if self.capacity < 1:
            raise InvalidParams("peer cache capacity must be positive")
        del self.entries[self.capacity:]

    def saw(self, node: int, t: float) -> None:
        self.entries = [(n, ts) for n, ts in self.entries if n != node]
        self.entries.insert(0, (node, t))
        del self.entries[self.capacity:]

    def nodes(self) -> list[int]:
        return [n for n, _ in self.entries]

    def __len__(self) -> int:
        return len(self.entries)


@dataclass
class BootstrapResult:
    entry: int
    probes: int
    elapsed: float


def bootstrap_peer_based(cache: PeerCache, probe: Callable[[int], bool], *,
                         timeout: float = 0.2, rtt: float = 0.1) -> BootstrapResult:
    """Probe cached peers in order; the first one that answers is the entry point.

    Dead entries are pruned from the cache.  Each failed probe costs one
    ``timeout``; the successful one costs one round trip.
    """
    if not cache.entries:
        raise BootstrapFailed("peer cache is empty")
    probes = 0
    elapsed = 0.0
    survivors = []
    found = None
    for node, seen in cache.entries:
        if found is not None:
            survivors.append((node, seen))
            continue
        probes += 1
        if probe(node):
            found = node
            elapsed += rtt
            survivors.append((node, seen))
        else:
            elapsed += timeout
    cache.entries = survivors
    if found is None:
        raise BootstrapFailed(f"none of {probes} cached peers responded")
    return BootstrapResult(found, probes, elapsed)


@dataclass
class Mediator:
    """Well-known entry point that tracks the online population."""

    handout_size: int = 20
    online: set[int] = field(default_factory=set)
    loss_rate: float = 0.0

    def attach(self, sim) -> None:
        """Keep ``online`` current from the simulator's leave events."""
        sim.leave_listeners.append(self.online.discard)


def bootstrap_mediated(mediator: Mediator, joiner: int, rng: random.Random) -> list[int]:
    """Sample up to ``handout_size`` online peers, then register the joiner.

    An empty result means the joiner is the first member and starts a new
    overlay.
    """
    if mediator.loss_rate > 0 and rng.random() < mediator.loss_rate:
        raise MediatorUnavailable("mediator request lost")
    pool = sorted(mediator.online - {joiner})
    handout = rng.sample(pool, min(mediator.handout_size, len(pool)))
    mediator.online.add(joiner)
    return handout


# groups

class Open:
    def admits(self, group: Group, votes: set[int]) -> bool:
        return True


@dataclass(frozen=True)
class Monarchy:
    owners: frozenset[int]

    def admits(self, group: Group, votes: set[int]) -> bool:
        return bool(self.owners & votes)


@dataclass(frozen=True)
class Voting:
    quorum: float

    def __post_init__(self):
        if not 0 < self.quorum <= 1:
            raise InvalidParams(f"quorum must be in (0, 1], got {self.quorum}")

    def admits(self, group: Group, votes: set[int]) -> bool:
        yes = len(votes & group.members)
        return yes >= math.ceil(self.quorum * len(group.members) - 1e-12)


@dataclass
class Group:
    group_id: int
    members: set[int] = field(default_factory=set)
    policy: Open | Monarchy | Voting = field(default_factory=Open)

    def __post_init__(self):
        if isinstance(self.policy, Monarchy) and not self.policy.owners <= self.members:
            raise InvalidParams("monarchy owners must be group members")


def join_group(group: Group, candidate: int, votes: Iterable[int] = ()) -> bool:
    """Admit ``candidate`` according to the group's policy.

    ``votes`` holds the ids of members approving the request; ballots are
    collected synchronously by the caller.
    """
    if candidate in group.members:
        raise AlreadyMember(f"{candidate} already in group {group.group_id}")
    accepted = group.policy.admits(group, set(votes))
    if accepted:
        group.members.add(candidate)
    return accepted


def scope_check(msg: Message, group: Group | None, receiver: int) -> bool:
    if msg.group_tag is None:
        return True
    return group is not None and msg.group_tag == group.group_id and receiver in group.members


# information consistency

class ConsistencyMode(enum.Enum):
    NONE = "none"
    HM_NOTIFY = "hm_notify"
    DUM_CACHE_EXPIRY = "dum_cache_expiry"
    DSM_REPUBLISH = "dsm_republish"


@dataclass(frozen=True)
class ConsistencyPolicy:
    mode: ConsistencyMode = ConsistencyMode.NONE
    descriptor_lifetime: float = math.inf
    republish_period: float = math.inf

    def __post_init__(self):
        if self.descriptor_lifetime <= 0 or self.republish_period <= 0:
            raise InvalidParams("lifetime and republish period must be positive")
        if (self.mode is ConsistencyMode.DSM_REPUBLISH
                and not self.republish_period < self.descriptor_lifetime):
            raise InvalidParams("republish period must be shorter than descriptor lifetime")


@dataclass
class Owned:
    descriptor: Descriptor
    last_published: float = -math.inf
    dirty: bool = True


@dataclass(frozen=True)
class Republish:
    descriptor: Descriptor


@dataclass(frozen=True)
class Evict:
    descriptor: Descriptor


@dataclass(frozen=True)
class Notify:
    descriptor: Descriptor


class DescriptorStore:
    """Per-peer descriptor state: what it owns, stores for others, and caches."""

    def __init__(self):
        self.owned: dict[int, Owned] = {}
        self.held: dict[int, dict[int, Descriptor]] = {}
        self.cache: dict[int, dict[int, Descriptor]] = {}

    def own(self, descriptor: Descriptor) -> None:
        self.owned[descriptor.key] = Owned(descriptor)

    def edit(self, descriptor: Descriptor) -> None:
        entry = self.owned.get(descriptor.key)
        if entry is None:
            self.own(descriptor)
        else:
            entry.descriptor = descriptor
            entry.dirty = True

    def store(self, descriptor: Descriptor) -> None:
        """Replace-and-reset: a newer copy from the same owner overwrites the old one."""
        self.held.setdefault(descriptor.key, {})[descriptor.owner] = descriptor

    def remember(self, descriptor: Descriptor) -> None:
        self.cache.setdefault(descriptor.key, {})[descriptor.owner] = descriptor

    def lookup(self, key: int, now: float) -> list[Descriptor]:
        return [d for _, d in sorted(self.held.get(key, {}).items()) if not d.expired(now)]

    def cached(self, key: int, now: float) -> list[Descriptor]:
        return [d for _, d in sorted(self.cache.get(key, {}).items()) if not d.expired(now)]

    def _expired(self, table: dict[int, dict[int, Descriptor]], now: float) -> list[Descriptor]:
        return [d for key in sorted(table) for _, d in sorted(table[key].items()) if d.expired(now)]

    def drop(self, descriptor: Descriptor) -> None:
        for table in (self.held, self.cache):
            bucket = table.get(descriptor.key)
            if bucket and bucket.get(descriptor.owner) is descriptor:
                del bucket[descriptor.owner]
                if not bucket:
                    del table[descriptor.key]


def consistency_tick(policy: ConsistencyPolicy, store: DescriptorStore, now: float) -> list:
    """Actions due at ``now`` under ``policy``.

    Expired stored descriptors are evicted under every mode.  Republish and
    Notify actions update the owned entry's bookkeeping; the caller is
    responsible for routing them.
    """
    actions: list = [Evict(d) for d in store._expired(store.held, now)]
    if policy.mode is ConsistencyMode.DUM_CACHE_EXPIRY:
        actions.extend(Evict(d) for d in store._expired(store.cache, now))
    for action in actions:
        store.drop(action.descriptor)
    if policy.mode is ConsistencyMode.DSM_REPUBLISH:
        for key in sorted(store.owned):
            entry = store.owned[key]
            if now - entry.last_published >= policy.republish_period - 1e-9:
                entry.descriptor = entry.descriptor.republished(now)
                entry.last_published = now
                entry.dirty = False
                actions.append(Republish(entry.descriptor))
    elif policy.mode is ConsistencyMode.HM_NOTIFY:
        for key in sorted(store.owned):
            entry = store.owned[key]
            if entry.dirty:
                entry.dirty = False
                entry.last_published = now
                actions.append(Notify(entry.descriptor))
    return actions
