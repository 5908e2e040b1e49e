"""Multisource piece transfer with rarest-first selection and tit-for-tat choking.

The bandwidth model is deliberately simple: a peer's upload capacity is split
equally across its uploads that have a block in flight, and a connection's
rate is fixed when a block starts (``min`` of the uploader's and the
downloader's equal shares).  Each connection carries one block at a time and
immediately requests the next one when a block lands.
"""

from __future__ import annotations

import logging
import math
import random
import statistics
from collections import Counter, deque
from dataclasses import dataclass, field
from typing import Callable, Iterable, Mapping

from .core import IdAllocator, KeySpace, content_digest
from .engine import Event, Simulator, Timer
from .errors import (AmbiguousVersion, CorruptPiece, InsufficientPeers, InvalidParams,
                     InvariantViolation, NothingWanted)
from .hybrid import Tracker
from .topology import TopologySnapshot

log = logging.getLogger(__name__)

KiB = 1 << 10
MiB = 1 << 20


@dataclass(frozen=True)
class ContentSpec:
    total_size: int
    piece_digests: tuple[bytes, ...]
    piece_size: int = 256 * KiB
    block_size: int = 16 * KiB

    def __post_init__(self):
        if self.piece_size <= 0 or self.block_size <= 0 or self.piece_size % self.block_size:
            raise InvalidParams("block_size must divide piece_size")
        if len(self.piece_digests) != math.ceil(self.total_size / self.piece_size):
            raise InvalidParams("one digest per piece required")

    @classmethod
    def from_data(cls, data: bytes, piece_size: int = 256 * KiB,
                  block_size: int = 16 * KiB) -> ContentSpec:
        digests = tuple(content_digest(p) for p in split_pieces(data, piece_size))
        return cls(len(data), digests, piece_size, block_size)

    @property
    def num_pieces(self) -> int:
        return len(self.piece_digests)

    def piece_length(self, idx: int) -> int:
        return min(self.piece_size, self.total_size - idx * self.piece_size)

    def blocks_in_piece(self, idx: int) -> int:
        return math.ceil(self.piece_length(idx) / self.block_size)

    def block_length(self, idx: int, block: int) -> int:
        return min(self.block_size, self.piece_length(idx) - block * self.block_size)


def split_pieces(data: bytes, piece_size: int) -> list[bytes]:
    return [data[i:i + piece_size] for i in range(0, len(data), piece_size)]


class PieceMap:
    """Bitfields of known peers and the replica count of every piece."""

    def __init__(self, num_pieces: int):
        self.num_pieces = num_pieces
        self.bitfields: dict[int, set[int]] = {}
        self.availability: Counter[int] = Counter()

    def set_bitfield(self, peer: int, pieces: Iterable[int]) -> None:
        self.remove_peer(peer)
        self.bitfields[peer] = set(pieces)
        self.availability.update(self.bitfields[peer])

    def add(self, peer: int, piece: int) -> bool:
        have = self.bitfields.setdefault(peer, set())
        if piece in have:
            return False
        have.add(piece)
        self.availability[piece] += 1
        return True

    def remove_peer(self, peer: int) -> None:
        for piece in self.bitfields.pop(peer, ()):
            self.availability[piece] -= 1
            if not self.availability[piece]:
                del self.availability[piece]

    def rarest(self, wanted: Iterable[int]) -> list[int]:
        cands = [p for p in wanted if self.availability.get(p, 0) > 0]
        if not cands:
            return []
        low = min(self.availability[p] for p in cands)
        return sorted(p for p in cands if self.availability[p] == low)


def rarest_first_pick(availability: Mapping[int, int], wanted: Iterable[int], rng: random.Random,
                      available: Iterable[int] | None = None) -> int:
    """Uniform choice among the least-replicated wanted pieces.

    ``available`` restricts the candidates further (pieces already served at
    least once); by default any piece with a known replica is available.
    """
    cands = {p for p in wanted if availability.get(p, 0) > 0}
    if available is not None:
        cands &= set(available)
    if not cands:
        raise NothingWanted("no wanted piece is available")
    low = min(availability[p] for p in cands)
    return rng.choice(sorted(p for p in cands if availability[p] == low))


def random_pick(wanted: Iterable[int], rng: random.Random) -> int:
    cands = sorted(wanted)
    if not cands:
        raise NothingWanted("no wanted piece")
    return rng.choice(cands)


# choke / unchoke

@dataclass
class ChokeState:
    M: int = 5
    K: int = 1
    T1: float = 10.0
    T2: float = 30.0
    interested: set[int] = field(default_factory=set)
    rates: dict[int, float] = field(default_factory=dict)
    regular: set[int] = field(default_factory=set)
    optimistic: set[int] = field(default_factory=set)
    # peers that keep us choked; they only get optimistic slots
    snubbed: set[int] = field(default_factory=set)

    def __post_init__(self):
        if not 0 <= self.K <= self.M:
            raise InvalidParams(f"need 0 <= K <= M, got K={self.K}, M={self.M}")
        if self.T1 <= 0 or self.T2 <= 0:
            raise InvalidParams("choke periods must be positive")

    @property
    def unchoked(self) -> set[int]:
        return self.regular | self.optimistic


def choke_round_regular(cs: ChokeState, rng: random.Random | None = None) -> set[int]:
    """Unchoke the M-K interested, non-snubbing peers with the highest rate.

    Ties go to the lower id, or to a random order when ``rng`` is given.
    """
    ranked = sorted(cs.interested - cs.snubbed)
    if rng is not None:
        rng.shuffle(ranked)
    ranked.sort(key=lambda p: -cs.rates.get(p, 0.0))
    cs.regular = set(ranked[: cs.M - cs.K])
    cs.optimistic &= cs.interested
    cs.optimistic -= cs.regular
    return set(cs.regular)


def choke_round_optimistic(cs: ChokeState, rng: random.Random) -> set[int]:
    """K uniform picks among interested peers outside the regular set."""
    pool = sorted(cs.interested - cs.regular)
    cs.optimistic = set(rng.sample(pool, min(cs.K, len(pool))))
    return set(cs.optimistic)


class ChokeScheduler:
    """Runs regular rounds every T1 and optimistic rounds every T2 for one peer.

    Rounds falling on the same instant run regular first, so the optimistic
    pick is drawn from the complement of the fresh regular set.  ``refresh``
    updates interest and rates before each round; ``on_change`` receives the
    peer's new unchoked set afterwards.
    """

    def __init__(self, sim: Simulator, owner: int, cs: ChokeState, rng: random.Random,
                 refresh: Callable[[ChokeState], None] | None = None,
                 on_change: Callable[[set[int]], None] | None = None,
                 check: bool = True, random_ties: bool = False):
        self.sim = sim
        self.owner = owner
        self.cs = cs
        self.rng = rng
        self.refresh = refresh
        self.on_change = on_change
        self.check = check
        self.random_ties = random_ties
        self.regular_rounds = 0
        self.optimistic_rounds = 0
        self.history: list[tuple[float, str, frozenset[int]]] = []
        self._next_regular = math.inf
        self._next_optimistic = math.inf

    def start(self, *, immediate: bool = False) -> None:
        if immediate:
            self.round_now(regular=True, optimistic=True)
        self._next_regular = self.sim.now + self.cs.T1
        self._next_optimistic = self.sim.now + self.cs.T2
        self._arm()

    def _arm(self) -> None:
        t = min(self._next_regular, self._next_optimistic)
        self.sim.schedule(t, Timer(self.owner, "choke.round", self._fire))

    def _fire(self) -> None:
        now = self.sim.now
        regular = now >= self._next_regular - 1e-9
        optimistic = now >= self._next_optimistic - 1e-9
        self.round_now(regular=regular, optimistic=optimistic)
        if regular:
            self._next_regular += self.cs.T1
        if optimistic:
            self._next_optimistic += self.cs.T2
        self._arm()

    def round_now(self, *, regular: bool, optimistic: bool) -> None:
        if self.refresh is not None:
            self.refresh(self.cs)
        if regular:
            choke_round_regular(self.cs, self.rng if self.random_ties else None)
            self.regular_rounds += 1
            self.history.append((self.sim.now, "regular", frozenset(self.cs.regular)))
        if optimistic:
            choke_round_optimistic(self.cs, self.rng)
            self.optimistic_rounds += 1
            self.history.append((self.sim.now, "optimistic", frozenset(self.cs.optimistic)))
        if self.check and len(self.cs.unchoked) > self.cs.M:
            raise InvariantViolation(f"peer {self.owner} unchoked {len(self.cs.unchoked)} > M")
        if self.on_change is not None:
            self.on_change(self.cs.unchoked)


# data protection

def verify_piece(data: bytes, spec: ContentSpec, idx: int) -> bool:
    if content_digest(data) != spec.piece_digests[idx]:
        raise CorruptPiece(f"piece {idx} failed its digest check")
    return True


def majority_version(observed: Iterable[tuple[bytes, int]]) -> bytes:
    """Digest with the most replicas; a tie for first place is ambiguous."""
    totals: Counter[bytes] = Counter()
    for digest, count in observed:
        totals[digest] += count
    if not totals:
        raise ValueError("no versions observed")
    ranked = totals.most_common()
    if len(ranked) > 1 and ranked[0][1] == ranked[1][1]:
        raise AmbiguousVersion(f"{ranked[0][1]} replicas each for several versions")
    return ranked[0][0]


def replicate_active(holders: set[int], live: Iterable[int], k_target: int,
                     rng: random.Random) -> list[int]:
    """Copy to ``k_target`` new holders drawn uniformly from live non-holders."""
    pool = sorted(set(live) - holders)
    if k_target > len(pool):
        raise InsufficientPeers(f"need {k_target} new holders, only {len(pool)} available")
    placed = rng.sample(pool, k_target)
    holders.update(placed)
    return placed


class ReplicaSet:
    """Keeps ``k_target`` live copies of one item by periodic repair."""

    def __init__(self, sim: Simulator, key: int, population: Iterable[int], k_target: int,
                 repair_period: float = 30.0):
        self.sim = sim
        self.key = key
        self.population = set(population)
        self.k_target = k_target
        self.repair_period = repair_period
        self.holders: set[int] = set()
        sim.leave_listeners.append(self.holders.discard)

    def live_count(self) -> int:
        return sum(1 for h in self.holders if self.sim.is_alive(h))

    def repair(self) -> list[int]:
        self.holders = {h for h in self.holders if self.sim.is_alive(h)}
        missing = self.k_target - len(self.holders)
        placed = []
        if missing > 0:
            live = [p for p in self.population if self.sim.is_alive(p)]
            placed = replicate_active(self.holders, live, missing, self.sim.rng(f"replica:{self.key}"))
        self.sim.record("replica.count", self.key, len(self.holders))
        return placed

    def start(self) -> None:
        def tick():
            try:
                self.repair()
            except InsufficientPeers:
                self.sim.counters["replica.insufficient"] += 1
            self.sim.call_at(self.sim.now + self.repair_period, tick, "replica.repair")
        self.sim.call_at(self.sim.now, tick, "replica.repair")


# swarm simulation

@dataclass
class SwarmConfig:
    total_size: int = 64 * MiB
    piece_size: int = 256 * KiB
    block_size: int = 16 * KiB
    M: int = 5
    K: int = 1
    T1: float = 10.0
    T2: float = 30.0
    rate_window: float = 20.0
    snub_timeout: float = 60.0
    seed_count: int = 1
    leecher_count: int = 19
    freerider_count: int = 1
    poisoner_count: int = 0
    upload_bps: float = 256 * KiB
    download_bps: float = 1 * MiB
    seed_upload_bps: float | None = None
    freerider_upload_bps: float = 0.0
    piece_selection: str = "rarest"
    handout: int = 20
    join_spread_s: float = 300.0
    leave_on_complete: bool = True
    min_neighbors: int = 5
    reannounce_s: float = 1800.0
    duration_s: float = 7200.0
    check_invariants: bool = True

    def __post_init__(self):
        if self.piece_selection not in ("rarest", "random"):
            raise InvalidParams(f"unknown piece selection {self.piece_selection!r}")
        if self.seed_count < 1:
            raise InvalidParams("a swarm needs at least one initial seed")
        if self.block_size <= 0 or self.piece_size % self.block_size:
            raise InvalidParams("block_size must divide piece_size")


@dataclass
class Partial:
    blocks: int = 0
    source: int | None = None
    contributors: set[int] = field(default_factory=set)


@dataclass
class SwarmPeer:
    id: int
    role: str
    up: float
    down: float
    have: set[int] = field(default_factory=set)
    data: dict[int, bytes] = field(default_factory=dict)
    partial: dict[int, Partial] = field(default_factory=dict)
    neighbors: set[int] = field(default_factory=set)
    view: PieceMap | None = None
    choke: ChokeState = field(default_factory=ChokeState)
    scheduler: ChokeScheduler | None = None
    recv_log: dict[int, deque] = field(default_factory=dict)
    last_recv: dict[int, float] = field(default_factory=dict)
    sent_log: dict[int, deque] = field(default_factory=dict)
    banned: set[int] = field(default_factory=set)
    uploading: dict[int, tuple[int, Event]] = field(default_factory=dict)
    downloads_active: int = 0
    joined_at: float = 0.0
    completed_at: float | None = None


@dataclass
class SwarmResult:
    completion: dict[str, list[float]]
    variance_at_half: float | None
    corrupt_pieces: int
    unfinished: int

    def mean_completion(self, role: str) -> float:
        times = self.completion.get(role, [])
        return statistics.fmean(times) if times else math.inf


class Swarm:
    """One torrent: a tracker, initial seeds and downloading peers."""

    def __init__(self, sim: Simulator, cfg: SwarmConfig, data: bytes | None = None):
        self.sim = sim
        self.cfg = cfg
        if data is None:
            data = sim.rng("swarm.content").randbytes(cfg.total_size)
        self.pieces = split_pieces(data, cfg.piece_size)
        self.spec = ContentSpec.from_data(data, cfg.piece_size, cfg.block_size)
        self.file_digest = content_digest(data)
        self.torrent = self.file_digest
        self.tracker = Tracker(handout=cfg.handout)
        self.tracker.publish(self.torrent)
        self.tracker.attach(sim)
        self.peers: dict[int, SwarmPeer] = {}
        self.corrupt = 0
        self.variance_at_half: float | None = None
        self._leecher_pieces = 0
        self._ids = IdAllocator(KeySpace(32), sim.rng("swarm.ids"))
        # pieces whose pristine buffer has already passed the digest check
        self._pristine_ok: set[int] = set()
        self._build()

    # setup

    def _build(self) -> None:
        cfg = self.cfg
        seed_up = cfg.upload_bps if cfg.seed_upload_bps is None else cfg.seed_upload_bps
        roster = ([("seed", seed_up)] * cfg.seed_count
                  + [("contributor", cfg.upload_bps)] * cfg.leecher_count
                  + [("free_rider", cfg.freerider_upload_bps)] * cfg.freerider_count
                  + [("poisoner", cfg.upload_bps)] * cfg.poisoner_count)
        join_rng = self.sim.rng("swarm.join")
        for role, up in roster:
            pid = self._ids.fresh()
            peer = SwarmPeer(pid, role, up, cfg.download_bps,
                             choke=ChokeState(cfg.M, cfg.K, cfg.T1, cfg.T2))
            peer.view = PieceMap(self.spec.num_pieces)
            if role in ("seed", "poisoner"):
                peer.have = set(range(self.spec.num_pieces))
                peer.data = dict(enumerate(self.pieces))
            self.peers[pid] = peer
            self.sim.add_node(pid, alive=False)
            t = 0.0 if role == "seed" else join_rng.uniform(0, cfg.join_spread_s)
            self.sim.call_at(t, lambda pid=pid: self._join(pid), "swarm.join")

    def _join(self, pid: int) -> None:
        peer = self.peers[pid]
        self.sim._join(pid)
        peer.joined_at = self.sim.now
        self._announce(pid)
        peer.scheduler = ChokeScheduler(
            self.sim, pid, peer.choke, self.sim.rng(f"swarm.optimistic:{pid}"),
            refresh=lambda cs, pid=pid: self._refresh(pid, cs),
            on_change=lambda unchoked, pid=pid: self._unchoked(pid, unchoked),
            check=self.cfg.check_invariants, random_ties=True)
        peer.scheduler.start(immediate=True)
        self.sim.set_timer(self.cfg.reannounce_s, pid, "swarm.reannounce",
                           lambda: self._reannounce(pid))

    def _reannounce(self, pid: int) -> None:
        self._announce(pid)
        self.sim.set_timer(self.cfg.reannounce_s, pid, "swarm.reannounce",
                           lambda: self._reannounce(pid))

    def _connect(self, a: int, b: int) -> None:
        pa, pb = self.peers[a], self.peers[b]
        if b in pa.neighbors or not self.sim.is_alive(b):
            return
        pa.neighbors.add(b)
        pb.neighbors.add(a)
        # the snub clock starts at connection time
        pa.last_recv[b] = pb.last_recv[a] = self.sim.now
        pa.view.set_bitfield(b, pb.have)
        pb.view.set_bitfield(a, pa.have)

    # choking

    def _rate(self, log: deque | None) -> float:
        if not log:
            return 0.0
        horizon = self.sim.now - self.cfg.rate_window
        while log and log[0][0] < horizon:
            log.popleft()
        return sum(n for _, n in log) / self.cfg.rate_window

    def complete(self, peer: SwarmPeer) -> bool:
        return len(peer.have) == self.spec.num_pieces

    def _interested(self, downloader: SwarmPeer, uploader: SwarmPeer) -> bool:
        return uploader.id not in downloader.banned and bool(uploader.have - downloader.have)

    def _refresh(self, pid: int, cs: ChokeState) -> None:
        peer = self.peers[pid]
        seeding = self.complete(peer)
        cs.interested = {n for n in peer.neighbors
                         if self.sim.is_alive(n) and self._interested(self.peers[n], peer)}
        if seeding:
            # nothing to reciprocate: favour whoever we have served least lately
            cs.rates = {n: -self._rate(peer.sent_log.get(n)) for n in cs.interested}
        else:
            cs.rates = {n: self._rate(peer.recv_log.get(n)) for n in cs.interested}
        now = self.sim.now
        cs.snubbed = {n for n in cs.interested
                      if not seeding and self._interested(peer, self.peers[n])
                      and now - peer.last_recv.get(n, now) > self.cfg.snub_timeout}

    def _unchoked(self, pid: int, unchoked: set[int]) -> None:
        for n in sorted(unchoked):
            self._start(pid, n)

    # transfers

    def _assign(self, down: SwarmPeer, up: SwarmPeer) -> int | None:
        if up.id in down.banned:
            return None
        resumable = [(-p.blocks, idx) for idx, p in down.partial.items()
                     if p.source is None and idx in up.have]
        if resumable:
            idx = min(resumable)[1]
        else:
            wanted = up.have - down.have - down.partial.keys()
            if not wanted:
                return None
            rng = self.sim.rng(f"swarm.pick:{down.id}")
            if self.cfg.piece_selection == "rarest":
                idx = rarest_first_pick(down.view.availability, wanted, rng)
            else:
                idx = random_pick(wanted, rng)
            down.partial[idx] = Partial()
        down.partial[idx].source = up.id
        return idx

    def _start(self, a: int, b: int) -> None:
        up, down = self.peers[a], self.peers[b]
        if up.up <= 0 or b in up.uploading or b not in up.choke.unchoked:
            return
        if not (self.sim.is_alive(a) and self.sim.is_alive(b)) or self.complete(down):
            return
        idx = self._assign(down, up)
        if idx is None:
            return
        part = down.partial[idx]
        nbytes = self.spec.block_length(idx, part.blocks)
        down.downloads_active += 1
        rate = min(up.up / (len(up.uploading) + 1), down.down / down.downloads_active)
        ev = self.sim.schedule(self.sim.now + nbytes / rate,
                               Timer(a, "swarm.block", lambda: self._block_done(a, b, idx, nbytes)))
        up.uploading[b] = (idx, ev)

    def _block_done(self, a: int, b: int, idx: int, nbytes: int) -> None:
        up, down = self.peers[a], self.peers[b]
        up.uploading.pop(b, None)
        down.downloads_active -= 1
        if not self.sim.is_alive(b):
            return
        part = down.partial.get(idx)
        if part is None:
            return
        part.blocks += 1
        part.contributors.add(a)
        part.source = None
        now = self.sim.now
        down.recv_log.setdefault(a, deque()).append((now, nbytes))
        down.last_recv[a] = now
        up.sent_log.setdefault(b, deque()).append((now, nbytes))
        if part.blocks == self.spec.blocks_in_piece(idx):
            self._piece_done(down, idx, part)
        self._start(a, b)

    def _piece_done(self, down: SwarmPeer, idx: int, part: Partial) -> None:
        del down.partial[idx]
        poisoned = any(self.peers[c].role == "poisoner" for c in part.contributors)
        data = self.pieces[idx]
        if poisoned:
            tampered = bytearray(data)
            tampered[0] ^= 0x01
            data = bytes(tampered)
        try:
            self._verify(idx, data)
        except CorruptPiece:
            self.corrupt += 1
            self.sim.record("swarm.corrupt_piece", down.id, idx)
            down.banned.update(part.contributors)
            return
        down.have.add(idx)
        down.data[idx] = data
        if down.role != "seed":
            self._leecher_pieces += 1
            self._check_half()
        for n in sorted(down.neighbors):
            self.peers[n].view.add(down.id, idx)
            if n in down.choke.unchoked:
                self._start(down.id, n)
        if self.complete(down):
            self._finished(down)

    def _verify(self, idx: int, data: bytes) -> None:
        pristine = data is self.pieces[idx]
        if pristine and idx in self._pristine_ok:
            return
        verify_piece(data, self.spec, idx)
        if pristine:
            self._pristine_ok.add(idx)

    def _matches_original(self, peer: SwarmPeer) -> bool:
        # byte equality per piece implies the assembled file has the original digest
        return all(peer.data.get(i) == self.pieces[i] for i in range(self.spec.num_pieces))

    def _finished(self, peer: SwarmPeer) -> None:
        peer.completed_at = self.sim.now
        if self.cfg.check_invariants and not self._matches_original(peer):
            raise InvariantViolation(f"peer {peer.id} assembled a file with the wrong digest")
        self.sim.record("swarm.completion_s", f"{peer.role}:{peer.id}", self.sim.now - peer.joined_at)
        if self.cfg.leave_on_complete:
            self.sim.call_at(self.sim.now, lambda: self._depart(peer.id), "swarm.depart")

    def _depart(self, pid: int) -> None:
        peer = self.peers[pid]
        self.sim._leave(pid)
        for b, (idx, _) in peer.uploading.items():
            # the block timers died with the uploader; release the downloader's slot
            down = self.peers[b]
            down.downloads_active -= 1
            if idx in down.partial:
                down.partial[idx].source = None
        peer.uploading.clear()
        for n in sorted(peer.neighbors):
            other = self.peers[n]
            other.neighbors.discard(pid)
            other.view.remove_peer(pid)
            other.choke.regular.discard(pid)
            other.choke.optimistic.discard(pid)
            if len(other.neighbors) < self.cfg.min_neighbors and not self.complete(other):
                self._announce(n)

    def _announce(self, pid: int) -> None:
        handout = self.tracker.announce(pid, self.torrent, self.sim.rng("swarm.tracker"), self.sim.now)
        for other in handout:
            self._connect(pid, other)

    def _downloaders(self) -> list[SwarmPeer]:
        return [p for p in self.peers.values() if p.role in ("contributor", "free_rider")]

    def _check_half(self) -> None:
        if self.variance_at_half is not None:
            return
        leechers = self._downloaders()
        if self._leecher_pieces * 2 >= len(leechers) * self.spec.num_pieces:
            counts = Counter()
            for p in leechers:
                if self.sim.is_alive(p.id):
                    counts.update(p.have)
            series = [counts.get(i, 0) for i in range(self.spec.num_pieces)]
            self.variance_at_half = statistics.pvariance(series)
            self.sim.record("swarm.replica_variance_50", "leechers", self.variance_at_half)

    def snapshot(self) -> TopologySnapshot:
        """Neighbour graph among peers currently in the swarm."""
        live = sorted(p for p in self.peers if self.sim.is_alive(p))
        alive = set(live)
        edges = {(min(u, v), max(u, v)) for u in live for v in self.peers[u].neighbors if v in alive}
        return TopologySnapshot(tuple(live), frozenset(edges))

    # driving

    def done(self) -> bool:
        return all(p.completed_at is not None for p in self._downloaders())

    def run(self, step: float = 10.0, *, until_half: bool = False) -> SwarmResult:
        """Advance until every downloader finished (or, with ``until_half``, until
        the half-completion replica snapshot has been taken)."""
        def finished():
            return self.variance_at_half is not None if until_half else self.done()
        while not finished() and self.sim.now < self.cfg.duration_s:
            self.sim.run_until(min(self.sim.now + step, self.cfg.duration_s))
        return self.result()

    def result(self) -> SwarmResult:
        completion: dict[str, list[float]] = {}
        unfinished = 0
        for p in self.peers.values():
            if p.role == "seed" or p.role == "poisoner":
                continue
            if p.completed_at is None:
                unfinished += 1
            else:
                completion.setdefault(p.role, []).append(p.completed_at - p.joined_at)
        return SwarmResult(completion, self.variance_at_half, self.corrupt, unfinished)


def run_swarm(seed: int, cfg: SwarmConfig | None = None, *, until_half: bool = False) -> SwarmResult:
    sim = Simulator(seed)
    return Swarm(sim, cfg or SwarmConfig()).run(until_half=until_half)
