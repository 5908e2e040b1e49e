"""Deterministic discrete-event simulator.

Events are ordered by ``(fire_at, seq)`` where ``seq`` is an insertion
counter, so events scheduled for the same instant run FIFO.  All randomness
comes from named sub-streams of one scenario seed (see :meth:`Simulator.rng`),
which keeps e.g. the churn trace independent of how many latency draws the
routing layer happened to make.
"""

from __future__ import annotations

import hashlib
import heapq
import logging
import math
import random
from collections import Counter, defaultdict
from dataclasses import dataclass, field
from typing import Any, Callable, Iterable

from .core import Message, MessageIds
from .errors import SchedulingInPast
from .metrics import MetricsLog

log = logging.getLogger(__name__)


def substream(seed: int, name: str) -> random.Random:
    """Independent ``random.Random`` derived from ``(seed, name)``."""
    material = hashlib.sha1(f"{seed}:{name}".encode()).digest()
    return random.Random(int.from_bytes(material, "big"))


@dataclass
class LinkModel:
    latency: float = 0.05
    latency_max: float | None = None
    loss_rate: float = 0.0

    def __post_init__(self):
        if self.latency < 0:
            raise ValueError("latency must be non-negative")
        if self.latency_max is not None and self.latency_max < self.latency:
            raise ValueError("latency_max must be >= latency")
        if not 0.0 <= self.loss_rate <= 1.0:
            raise ValueError("loss_rate must be in [0, 1]")

    def sample_latency(self, rng: random.Random) -> float:
        if self.latency_max is None or self.latency_max == self.latency:
            return self.latency
        return rng.uniform(self.latency, self.latency_max)


@dataclass
class ChurnConfig:
    mean_session: float = math.inf
    mean_offline: float = 60.0

    def __post_init__(self):
        if not (self.mean_session > 0 and self.mean_offline > 0):
            raise ValueError("churn means must be strictly positive")


# event actions

@dataclass
class Deliver:
    message: Message
    to: int


@dataclass
class Timer:
    owner: int | None
    kind: str
    callback: Callable[[], Any]


@dataclass
class Join:
    node: int


@dataclass
class Leave:
    node: int


@dataclass(order=True)
class Event:
    fire_at: float
    seq: int
    action: Any = field(compare=False)
    cancelled: bool = field(default=False, compare=False)

    def cancel(self) -> None:
        self.cancelled = True


class Simulator:
    def __init__(self, seed: int = 0, link: LinkModel | None = None):
        self.seed = seed
        self.link = link or LinkModel()
        self.now = 0.0
        self.log = MetricsLog()
        self.counters: Counter[str] = Counter()
        self.msg_ids = MessageIds()
        self.alive: set[int] = set()
        self._queue: list[Event] = []
        self._seq = 0
        self._rngs: dict[str, random.Random] = {}
        self._handlers: dict[int, Callable[[Message], Any]] = {}
        self._timers: dict[int, dict[int, Event]] = defaultdict(dict)
        self.join_listeners: list[Callable[[int], Any]] = []
        self.leave_listeners: list[Callable[[int], Any]] = []

    # randomness

    def rng(self, name: str) -> random.Random:
        stream = self._rngs.get(name)
        if stream is None:
            stream = self._rngs[name] = substream(self.seed, name)
        return stream

    # scheduling

    def schedule(self, fire_at: float, action) -> Event:
        if fire_at < self.now:
            raise SchedulingInPast(f"event at t={fire_at} scheduled when now={self.now}")
        ev = Event(fire_at, self._seq, action)
        self._seq += 1
        heapq.heappush(self._queue, ev)
        if isinstance(action, Timer) and action.owner is not None:
            self._timers[action.owner][ev.seq] = ev
        return ev

    def call_at(self, t: float, callback: Callable[[], Any], kind: str = "call") -> Event:
        return self.schedule(t, Timer(None, kind, callback))

    def set_timer(self, delay: float, owner: int | None, kind: str,
                  callback: Callable[[], Any]) -> Event:
        """Timer owned by ``owner``; cancelled automatically if the owner leaves."""
        return self.schedule(self.now + delay, Timer(owner, kind, callback))

    def pending(self) -> int:
        return sum(1 for ev in self._queue if not ev.cancelled)

    def pop(self) -> Event | None:
        while self._queue:
            ev = heapq.heappop(self._queue)
            if not ev.cancelled:
                return ev
        return None

    def _execute(self, ev: Event) -> None:
        self.now = ev.fire_at
        action = ev.action
        if isinstance(action, Deliver):
            self._deliver(action)
        elif isinstance(action, Timer):
            if action.owner is not None:
                self._timers[action.owner].pop(ev.seq, None)
            action.callback()
        elif isinstance(action, Join):
            self._join(action.node)
        elif isinstance(action, Leave):
            self._leave(action.node)
        else:
            raise TypeError(f"unknown event action {action!r}")

    def step(self) -> bool:
        ev = self.pop()
        if ev is None:
            return False
        self._execute(ev)
        return True

    def run_until(self, t_end: float) -> MetricsLog:
        if t_end < self.now:
            raise SchedulingInPast(f"run_until({t_end}) with now={self.now}")
        while self._queue:
            head = self._queue[0]
            if head.cancelled:
                heapq.heappop(self._queue)
                continue
            if head.fire_at > t_end:
                break
            heapq.heappop(self._queue)
            self._execute(head)
        self.now = t_end
        return self.log

    def run_until_idle(self, max_events: int = 10_000_000) -> MetricsLog:
        """Drain the queue completely (only sensible without periodic timers)."""
        for _ in range(max_events):
            if not self.step():
                return self.log
        raise RuntimeError("event budget exhausted; periodic timers still pending?")

    # nodes and messages

    def add_node(self, node: int, handler: Callable[[Message], Any] | None = None,
                 *, alive: bool = True) -> None:
        if handler is not None:
            self._handlers[node] = handler
        if alive:
            self.alive.add(node)

    def set_handler(self, node: int, handler: Callable[[Message], Any]) -> None:
        self._handlers[node] = handler

    def is_alive(self, node: int) -> bool:
        return node in self.alive

    def join_at(self, t: float, node: int) -> Event:
        return self.schedule(t, Join(node))

    def leave_at(self, t: float, node: int) -> Event:
        return self.schedule(t, Leave(node))

    def _join(self, node: int) -> None:
        if node in self.alive:
            return
        self.alive.add(node)
        self.counters["joins"] += 1
        for listener in self.join_listeners:
            listener(node)

    def _leave(self, node: int) -> None:
        if node not in self.alive:
            return
        self.alive.discard(node)
        self.counters["leaves"] += 1
        for ev in self._timers.pop(node, {}).values():
            ev.cancel()
        for listener in self.leave_listeners:
            listener(node)

    def send(self, message: Message, to: int, *, latency: float | None = None) -> Event | None:
        """Queue ``message`` for delivery to ``to``.

        Returns None if the link dropped it.  Senders must be alive.
        """
        if message.src not in self.alive:
            raise RuntimeError(f"node {message.src} is not alive and cannot send")
        self.counters["sent"] += 1
        if self.link.loss_rate > 0 and self.rng("link.loss").random() < self.link.loss_rate:
            self.counters["dropped_loss"] += 1
            return None
        if latency is None:
            latency = self.link.sample_latency(self.rng("link.latency"))
        return self.schedule(self.now + latency, Deliver(message, to))

    def _deliver(self, action: Deliver) -> None:
        if action.to not in self.alive:
            self.counters["dropped_dead"] += 1
            return
        handler = self._handlers.get(action.to)
        if handler is None:
            self.counters["dropped_unhandled"] += 1
            return
        self.counters["delivered"] += 1
        handler(action.message)

    def new_msg_id(self) -> int:
        return self.msg_ids.next()

    # metrics

    def record(self, name: str, subject, value) -> None:
        self.log.record(self.now, name, subject, value)

    # churn

    def start_churn(self, cfg: ChurnConfig, population: Iterable[int]) -> None:
        """Alternate Leave/Join per node with exponential holding times.

        Each node draws from its own ``churn:<node>`` stream, so the trace for a
        node can be replayed from that stream alone.
        """
        if math.isinf(cfg.mean_session):
            return
        for node in sorted(population):
            self._schedule_leave(cfg, node)

    def _schedule_leave(self, cfg: ChurnConfig, node: int) -> None:
        rng = self.rng(f"churn:{node}")
        t = self.now + rng.expovariate(1.0 / cfg.mean_session)

        def leave():
            self._leave(node)
            self._schedule_join(cfg, node)

        self.schedule(t, Timer(None, "churn.leave", leave))

    def _schedule_join(self, cfg: ChurnConfig, node: int) -> None:
        rng = self.rng(f"churn:{node}")
        t = self.now + rng.expovariate(1.0 / cfg.mean_offline)

        def join():
            self._join(node)
            self._schedule_leave(cfg, node)

        self.schedule(t, Timer(None, "churn.join", join))

