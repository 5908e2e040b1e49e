"""Local (subjective) credit, eMule style, and a credit-ordered upload queue.

Amounts are binary megabytes (2**20 bytes).
"""

from __future__ import annotations

import heapq
import itertools
import math
import statistics
from dataclasses import dataclass, field

from .errors import NegativeInput

MB = 1 << 20


def credit(uploaded_total: float, downloaded_total: float) -> float:
    """Credit a peer earns from what it uploaded to us versus what it took.

    ``uploaded_total`` is data we received from the peer, ``downloaded_total``
    data the peer received from us, both in MB.
    """
    if uploaded_total < 0 or downloaded_total < 0:
        raise NegativeInput("transfer totals must be non-negative")
    ratio = 10.0 if downloaded_total == 0 else uploaded_total * 2 / downloaded_total
    root = 1.0 if uploaded_total < 1 else math.sqrt(uploaded_total + 2)
    return min(max(min(ratio, root), 1.0), 10.0)


@dataclass
class Totals:
    uploaded: float = 0.0
    downloaded: float = 0.0


class CreditLedger:
    """One peer's private view of everybody it has traded with."""

    def __init__(self):
        self.entries: dict[int, Totals] = {}

    def totals(self, peer: int) -> Totals:
        entry = self.entries.get(peer)
        if entry is None:
            entry = self.entries[peer] = Totals()
        return entry

    def record_transfer(self, peer: int, direction: str, nbytes: int) -> None:
        """``direction`` is ``"received"`` (peer uploaded to us) or ``"sent"``."""
        if nbytes < 0:
            raise NegativeInput("byte count must be non-negative")
        entry = self.totals(peer)
        if direction == "received":
            entry.uploaded += nbytes / MB
        elif direction == "sent":
            entry.downloaded += nbytes / MB
        else:
            raise ValueError(f"unknown direction {direction!r}")

    def credit(self, peer: int) -> float:
        entry = self.totals(peer)
        return credit(entry.uploaded, entry.downloaded)


def priority_weight(value: float) -> float:
    return value


class UploadQueue:
    """Waiting requesters served by descending weight, FIFO among equals."""

    def __init__(self):
        self._heap: list[tuple[float, int, int]] = []
        self._seq = itertools.count()

    def push(self, peer: int, weight: float) -> None:
        heapq.heappush(self._heap, (-weight, next(self._seq), peer))

    def pop(self) -> int:
        return heapq.heappop(self._heap)[2]

    def __len__(self) -> int:
        return len(self._heap)


@dataclass
class QueueOutcome:
    waits: dict[str, list[float]] = field(default_factory=dict)

    def mean_wait(self, cls: str) -> float:
        return statistics.fmean(self.waits[cls]) if self.waits.get(cls) else math.nan


class SeedQueue:
    """A seed with one upload slot serving a mixed population of requesters.

    Contributors are credited with ``prior_upload_mb`` before the run; free
    riders never uploaded.  With ``reputation`` the queue is ordered by the
    seed's credit for each requester, otherwise FIFO.
    """

    def __init__(self, sim, *, seed_id: int = 0, contributors: int = 10, free_riders: int = 10,
                 chunk_mb: float = 9.28, slot_rate_mbps: float = 1.0, requests_per_peer: int = 5,
                 mean_think_s: float = 30.0, prior_upload_mb: tuple[float, float] = (5.0, 50.0),
                 reputation: bool = True, start: float = 0.0):
        self.sim = sim
        self.seed_id = seed_id
        self.chunk_mb = chunk_mb
        self.service = chunk_mb / slot_rate_mbps
        self.mean_think_s = mean_think_s
        self.reputation = reputation
        self.ledger = CreditLedger()
        self.queue = UploadQueue()
        self.klass: dict[int, str] = {}
        self.remaining: dict[int, int] = {}
        self.enqueued_at: dict[int, float] = {}
        self.outcome = QueueOutcome({"contributor": [], "free_rider": []})
        self.busy = False
        self.rng = sim.rng(f"queue.workload:{seed_id}")
        first = seed_id + 1
        for p in range(first, first + contributors + free_riders):
            self.klass[p] = "contributor" if p < first + contributors else "free_rider"
            self.remaining[p] = requests_per_peer
            if self.klass[p] == "contributor":
                self.ledger.record_transfer(p, "received", int(self.rng.uniform(*prior_upload_mb) * MB))
        for p in sorted(self.klass):
            sim.call_at(start + self.rng.uniform(0, mean_think_s), lambda p=p: self.request(p), "queue.req")

    def request(self, p: int) -> None:
        self.enqueued_at[p] = self.sim.now
        value = self.ledger.credit(p)
        self.sim.record("credit", f"{self.seed_id}:{p}", value)
        self.queue.push(p, priority_weight(value) if self.reputation else 0.0)
        if not self.busy:
            self._serve_next()

    def _serve_next(self) -> None:
        if not self.queue:
            self.busy = False
            return
        self.busy = True
        p = self.queue.pop()
        wait = self.sim.now - self.enqueued_at.pop(p)
        self.outcome.waits[self.klass[p]].append(wait)
        self.sim.record("queue.wait", f"{self.klass[p]}:{p}", wait)
        self.sim.call_at(self.sim.now + self.service, lambda: self._done(p), "queue.done")

    def _done(self, p: int) -> None:
        self.ledger.record_transfer(p, "sent", int(self.chunk_mb * MB))
        self.remaining[p] -= 1
        if self.remaining[p] > 0:
            delay = self.rng.expovariate(1 / self.mean_think_s)
            self.sim.call_at(self.sim.now + delay, lambda: self.request(p), "queue.req")
        self._serve_next()


def queue_experiment(seed: int, *, reputation: bool = True, **kw) -> QueueOutcome:
    """Run a :class:`SeedQueue` to exhaustion on its own simulator; per-class waits."""
    from .engine import Simulator

    sim = Simulator(seed)
    q = SeedQueue(sim, reputation=reputation, **kw)
    sim.run_until_idle()
    return q.outcome
