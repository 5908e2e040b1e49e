"""Run orchestration: scenario -> simulator + workload -> metrics, summary, snapshots."""

from __future__ import annotations

import json
import logging
import math
import statistics
from collections import Counter
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable

from .chord import ChordRing, DsmPublisher, successor_oracle
from .core import Descriptor, IdAllocator, KeySpace, Message, MessageKind
from .dum import DumOverlay
from .engine import ChurnConfig, LinkModel, Simulator
from .errors import EmptyRing, InvariantViolation, JoinFailed, LookupTimeout, NoSnapshot
from .hybrid import IndexServer
from .membership import ConsistencyMode, ConsistencyPolicy, Mediator
from .metrics import MetricsLog
from .reputation import SeedQueue
from .scenario import Scenario
from .swarm import Swarm, SwarmConfig
from .topology import (BaParams, ErParams, TopologySnapshot, WsParams, fit_power_law,
                       generate_ba, generate_er, generate_ws, metrics, write_edge_list)

log = logging.getLogger(__name__)

PRESETS: dict[str, dict[str, object]] = {
    "bittorrent_baseline": {
        "scenario.overlay": "hm", "scenario.workload": "swarm", "scenario.duration_s": 3600.0,
        "reputation.enabled": False,
    },
    "gnutella_flood": {
        "scenario.overlay": "dum", "scenario.workload": "flood", "scenario.nodes": 200,
        "scenario.duration_s": 120.0, "scenario.snapshot_period_s": 30.0,
        "topology.model": "er", "topology.alpha": 6.0, "dum.ttl": 5,
        "workload.publishes": 20, "workload.queries": 50,
    },
    "chord_lookup_bench": {
        "scenario.overlay": "dsm", "scenario.workload": "lookup", "scenario.nodes": 256,
        "scenario.duration_s": 60.0, "dsm.m_bits": 16, "workload.lookups": 1000,
    },
    "emule_hybrid": {
        "scenario.overlay": "hm", "scenario.workload": "hybrid", "scenario.nodes": 50,
        "scenario.duration_s": 900.0, "reputation.enabled": True, "consistency.mode": "hm_notify",
        "workload.publishes": 100, "workload.queries": 200,
    },
    "layered_supernodes": {
        "scenario.overlay": "lm", "scenario.workload": "layered", "scenario.nodes": 200,
        "scenario.duration_s": 120.0, "topology.model": "er", "topology.alpha": 4.0, "dum.ttl": 3,
        "workload.publishes": 100, "workload.queries": 100,
    },
    "topology_suite": {
        "scenario.workload": "topology", "scenario.nodes": 500, "scenario.duration_s": 10.0,
        "topology.runs": 3,
    },
}

AUTO_WORKLOAD = {"dum": "flood", "dsm": "storage", "hm": "hybrid", "lm": "layered"}


def preset(name: str, **overrides) -> Scenario:
    if name not in PRESETS:
        raise KeyError(f"unknown preset {name!r}; try one of {', '.join(PRESETS)}")
    values = dict(PRESETS[name])
    values.update({k.replace("__", ".", 1): v for k, v in overrides.items()})
    return Scenario(values)


@dataclass
class RunResult:
    scenario: Scenario
    log: MetricsLog
    summary: dict[str, float] = field(default_factory=dict)
    snapshots: dict[float, TopologySnapshot] = field(default_factory=dict)
    counters: Counter = field(default_factory=Counter)


def export_topology(result: RunResult, t: float, path: str | Path | None = None) -> TopologySnapshot:
    """Snapshot taken at the latest recorded time not after ``t``."""
    prior = [x for x in sorted(result.snapshots) if x <= t]
    if not prior:
        raise NoSnapshot(f"no topology snapshot at or before t={t}")
    snap = result.snapshots[prior[-1]]
    if path is not None:
        write_edge_list(snap, path)
    return snap


def link_model(sc: Scenario) -> LinkModel:
    hi = sc["link.latency_max_s"]
    return LinkModel(sc["link.latency_s"], hi if hi > sc["link.latency_s"] else None, sc["link.loss_rate"])


def consistency_policy(sc: Scenario) -> ConsistencyPolicy:
    mode = ConsistencyMode[sc["consistency.mode"].upper()]
    return ConsistencyPolicy(mode, sc["consistency.lifetime_s"], sc["consistency.republish_s"])


def make_topology(sc: Scenario, n: int, rng, model: str | None = None) -> TopologySnapshot:
    model = model or sc["topology.model"]
    if model == "er":
        return generate_er(ErParams(n, sc["topology.alpha"]), rng)
    if model == "ws":
        return generate_ws(WsParams(n, sc["topology.k_ring"], sc["topology.p_rewire"]), rng)
    return generate_ba(BaParams(n, sc["topology.m_attach"]), rng)


class _Run:
    """Shared plumbing for one workload: simulator, snapshots and summary."""

    def __init__(self, sc: Scenario):
        self.sc = sc
        self.sim = Simulator(sc.seed, link_model(sc))
        self.summary: dict[str, float] = {}
        self.snapshots: dict[float, TopologySnapshot] = {}
        self.topology_source: Callable[[], TopologySnapshot] | None = None

    def snapshot(self) -> None:
        if self.topology_source is None:
            return
        snap = self.topology_source()
        self.snapshots[self.sim.now] = snap
        if snap.nodes:
            m = metrics(snap)
            self.sim.record("topology.mean_degree", "overlay", m.mean_degree)
            self.sim.record("topology.clustering", "overlay", m.clustering_coefficient)
            self.sim.record("topology.avg_distance", "overlay", m.avg_connected_distance)
            self.sim.record("topology.diameter", "overlay", m.diameter)
            self.sim.record("topology.components", "overlay", m.component_count)

    def schedule_snapshots(self) -> None:
        period = self.sc["scenario.snapshot_period_s"]
        self.snapshot()
        if period > 0:
            t = period
            while t < self.sc.duration:
                self.sim.call_at(t, self.snapshot, "snapshot")
                t += period

    def finish(self) -> None:
        self.sim.run_until(self.sc.duration)
        self.snapshot()

    def churn(self, population) -> None:
        cfg = ChurnConfig(self.sc["churn.mean_session_s"], self.sc["churn.mean_offline_s"])
        self.sim.start_churn(cfg, population)

    def times(self, count: int) -> list[float]:
        start, step = self.sc["workload.start_s"], self.sc["workload.interval_s"]
        return [t for t in (start + i * step for i in range(count)) if t < self.sc.duration]


# workloads

def _flood(run: _Run) -> None:
    sc, sim = run.sc, run.sim
    rng = sim.rng("workload")
    snap = make_topology(sc, sc["scenario.nodes"], sim.rng("topology"))
    mediator = None
    if sc["bootstrap.mode"] == "mediated":
        mediator = Mediator(sc["bootstrap.handout_size"], set(snap.nodes))
        mediator.attach(sim)
    overlay = DumOverlay(sim, snap, peerview_max=sc["dum.peerview_max"],
                         seen_retention=sc["dum.seen_retention_s"],
                         policy=consistency_policy(sc), mediator=mediator)
    run.topology_source = overlay.snapshot
    ks = KeySpace(sc["dsm.m_bits"])
    keys = []
    for i in range(sc["workload.publishes"]):
        owner = rng.choice(snap.nodes)
        d = Descriptor.for_body(f"item-{i}".encode(), owner, ks, lifetime=sc["consistency.lifetime_s"])
        overlay.publish(owner, d)
        keys.append(d.key)
    run.churn(snap.nodes)
    run.schedule_snapshots()
    ttl, prob = sc["dum.ttl"], sc["dum.forward_prob"]
    settle = 2 * (ttl + 1) * max(sc["link.latency_s"], sc["link.latency_max_s"]) + 1.0
    coverage, hits = [], []

    def query():
        live = sorted(sim.alive & set(snap.nodes))
        if len(live) < 2 or not keys:
            return
        origin, key = rng.choice(live), rng.choice(keys)
        trace = overlay.flood(origin, key, ttl, forward_prob=prob)

        def report():
            population = len(sim.alive & set(snap.nodes))
            cov = trace.coverage(population)
            coverage.append(cov)
            hits.append(bool(trace.hits))
            sim.record("dum.coverage", trace.msg_id, cov)
            sim.record("dum.copies", trace.msg_id, trace.copies)
            sim.record("dum.hit", trace.msg_id, bool(trace.hits))
        sim.call_at(sim.now + settle, report, "flood.report")

    for t in run.times(sc["workload.queries"]):
        sim.call_at(t, query, "flood.query")
    if sc["dum.ping_period_s"] > 0:
        def ping():
            live = sorted(sim.alive & set(snap.nodes))
            if live:
                overlay.ping(rng.choice(live), ttl)
            sim.call_at(sim.now + sc["dum.ping_period_s"], ping, "dum.ping")
        sim.call_at(sc["dum.ping_period_s"], ping, "dum.ping")
    run.finish()
    run.summary.update({
        "flood.queries": len(coverage),
        "flood.coverage_mean": statistics.fmean(coverage) if coverage else math.nan,
        "flood.hit_rate": statistics.fmean(hits) if hits else math.nan,
        "dum.path_lost": overlay.counters["path_lost"],
    })


def _chord_ring(run: _Run, n: int) -> tuple[ChordRing, list[int]]:
    sc, sim = run.sc, run.sim
    ks = KeySpace(sc["dsm.m_bits"])
    if n > ks.size:
        raise InvariantViolation(f"{n} nodes do not fit a {ks.m_bits}-bit ring")
    alloc = IdAllocator(ks, sim.rng("chord.ids"))
    ids = sorted(alloc.fresh() for _ in range(n))
    ring = ChordRing.quiesced(sim, ks, ids, succ_list_len=sc["dsm.succ_list_len"],
                              stabilize_period=sc["dsm.stabilize_period_s"],
                              audit_period=sc["dsm.audit_period_s"], policy=consistency_policy(sc))

    def ring_edges() -> TopologySnapshot:
        live = ring.live_ids()
        edges = {(min(u, ring.nodes[u].successor), max(u, ring.nodes[u].successor))
                 for u in live if ring.live(ring.nodes[u].successor) and ring.nodes[u].successor != u}
        return TopologySnapshot(tuple(live), frozenset(edges))

    run.topology_source = ring_edges
    return ring, ids


def _lookup(run: _Run) -> None:
    sc, sim = run.sc, run.sim
    ring, ids = _chord_ring(run, sc["scenario.nodes"])
    rng = sim.rng("workload")
    hops: list[int] = []
    mismatches = [0]
    run.schedule_snapshots()

    def one():
        origin = rng.choice(ids)
        key = rng.randrange(ring.ks.size)
        res = ring.lookup_scalable(origin, key)
        hops.append(res.hops)
        if res.owner != successor_oracle(ring.live_ids(), key, ring.ks):
            mismatches[0] += 1
            sim.record("chord.mismatch", origin, key)

    start = sc["workload.start_s"] if sc["workload.start_s"] < sc.duration else 0.0
    step = min(sc["workload.interval_s"], (sc.duration - start) / max(sc["workload.lookups"], 1))
    for i in range(sc["workload.lookups"]):
        sim.call_at(start + i * step, one, "chord.lookup")
    run.finish()
    if mismatches[0] and math.isinf(sc["churn.mean_session_s"]):
        raise InvariantViolation(f"{mismatches[0]} lookups disagreed with the successor oracle")
    run.summary.update({
        "chord.lookups": len(hops),
        "chord.hops_mean": statistics.fmean(hops) if hops else math.nan,
        "chord.hops_max": max(hops, default=0),
        "chord.mismatches": mismatches[0],
    })


def _storage(run: _Run) -> None:
    sc, sim = run.sc, run.sim
    ring, ids = _chord_ring(run, sc["scenario.nodes"])
    rng = sim.rng("workload")
    policy = consistency_policy(sc)
    for node in ids:
        ring.start_maintenance(node)

    def on_join(node: int) -> None:
        live = [n for n in ring.live_ids() if n != node]
        if not live:
            return
        try:
            ring.rejoin(node, rng.choice(live))
            ring.start_maintenance(node)
        except (JoinFailed, LookupTimeout):
            sim.counters["chord.rejoin_failed"] += 1

    sim.join_listeners.append(on_join)
    owners = sorted(rng.sample(ids, min(len(ids), max(1, sc["workload.publishes"]))))
    prober_pool = [n for n in ids if n not in set(owners)] or ids
    keys: list[int] = []
    publishers = {}
    for i in range(sc["workload.publishes"]):
        owner = owners[i % len(owners)]
        d = Descriptor.for_body(f"doc-{i}".encode(), owner, ring.ks, lifetime=policy.descriptor_lifetime)
        keys.append(d.key)
        pub = publishers.setdefault(owner, DsmPublisher(ring, owner, policy))
        sim.call_at(sc["workload.start_s"], lambda pub=pub, d=d: pub.publish(d), "dsm.publish")
    if not math.isinf(sc["workload.owner_departs_s"]):
        for owner in owners:
            sim.leave_at(sc["workload.owner_departs_s"], owner)
    run.churn([n for n in ids if n not in set(owners)])
    run.schedule_snapshots()
    last_ok = [-math.inf]
    outcomes: list[bool] = []

    def probe():
        live = [n for n in prober_pool if sim.is_alive(n)]
        if live:
            origin = live[0]
            for key in keys:
                try:
                    ok = bool(ring.get(origin, key))
                except (LookupTimeout, EmptyRing):
                    ok = False
                outcomes.append(ok)
                sim.record("dsm.get_ok", key, ok)
                if ok:
                    last_ok[0] = sim.now
        sim.call_at(sim.now + sc["workload.probe_period_s"], probe, "dsm.probe")

    if keys:
        sim.call_at(sc["workload.start_s"], probe, "dsm.probe")
    run.finish()
    run.summary.update({
        "dsm.get_success_rate": statistics.fmean(outcomes) if outcomes else math.nan,
        "dsm.last_success_s": last_ok[0],
        "dsm.ring_consistent": ring.is_consistent() if ring.live_ids() else True,
    })


def _hybrid(run: _Run) -> None:
    sc, sim = run.sc, run.sim
    rng = sim.rng("workload")
    n = sc["scenario.nodes"]
    server = IndexServer(offer_limit=sc["hm.offer_limit"])
    server.attach(sim)
    peers = list(range(1, n + 1))
    ks = KeySpace(sc["dsm.m_bits"])
    policy = consistency_policy(sc)
    shared: dict[int, dict[int, Descriptor]] = {p: {} for p in peers}
    for i in range(sc["workload.publishes"]):
        p = rng.choice(peers)
        d = Descriptor.for_body(f"file-{i}".encode(), p, ks)
        shared[p][d.key] = d

    for p in peers:
        sim.add_node(p)
        server.register(p)
        server.offer_files(p, shared[p].values())

    def on_join(p: int) -> None:
        if p in shared:
            server.register(p)
            server.offer_files(p, shared[p].values())

    sim.join_listeners.append(on_join)
    run.churn(peers)
    stale, searches, found = [0], [0], [0]

    def edit():
        owners = [p for p in peers if sim.is_alive(p) and shared[p]]
        if owners:
            p = rng.choice(owners)
            key = rng.choice(sorted(shared[p]))
            old = shared[p][key]
            new = Descriptor(old.key, old.owner, old.content_digest, sim.now, old.lifetime, old.version + 1)
            shared[p][key] = new
            if policy.mode is ConsistencyMode.HM_NOTIFY:
                sim.send(Message(sim.new_msg_id(), MessageKind.NOTIFY, p, payload=new), server.node_id)
        sim.call_at(sim.now + sc["workload.interval_s"] * 5, edit, "hm.edit")

    def search():
        live = [p for p in peers if sim.is_alive(p)]
        all_keys = sorted({k for files in shared.values() for k in files})
        if live and all_keys:
            key = rng.choice(all_keys)
            hits = server.search_descriptors(key)
            searches[0] += 1
            found[0] += bool(hits)
            for provider, d in hits:
                if not sim.is_alive(provider):
                    raise InvariantViolation(f"index returned departed provider {provider}")
                if d.version != shared[provider][key].version:
                    stale[0] += 1
            sim.record("hm.search_hits", key, len(hits))

    sim.call_at(sc["workload.start_s"], edit, "hm.edit")
    for t in run.times(sc["workload.queries"]):
        sim.call_at(t, search, "hm.search")
    queue = None
    if sc["reputation.enabled"]:
        queue = SeedQueue(sim, seed_id=n + 1, contributors=sc["reputation.contributors"],
                          free_riders=sc["reputation.free_riders"], chunk_mb=sc["reputation.chunk_mb"],
                          slot_rate_mbps=sc["reputation.slot_rate_mbps"], start=sc["workload.start_s"])
    run.finish()
    run.summary.update({
        "hm.searches": searches[0],
        "hm.search_hit_rate": found[0] / searches[0] if searches[0] else math.nan,
        "hm.stale_results": stale[0],
        "hm.offers_rejected": server.counters["offers_rejected"],
    })
    if queue is not None:
        run.summary["queue.wait_contributor_mean"] = queue.outcome.mean_wait("contributor")
        run.summary["queue.wait_free_rider_mean"] = queue.outcome.mean_wait("free_rider")


def swarm_config(sc: Scenario) -> SwarmConfig:
    return SwarmConfig(
        total_size=sc["swarm.total_size"], piece_size=sc["swarm.piece_size"],
        block_size=sc["swarm.block_size"], M=sc["swarm.M"], K=sc["swarm.K"],
        T1=sc["swarm.T1_s"], T2=sc["swarm.T2_s"], rate_window=sc["swarm.rate_window_s"],
        snub_timeout=sc["swarm.snub_timeout_s"], seed_count=sc["swarm.seed_count"],
        leecher_count=sc["swarm.leecher_count"], freerider_count=sc["swarm.freerider_count"],
        poisoner_count=sc["swarm.poisoner_count"], upload_bps=sc["swarm.leecher_upload_bps"],
        download_bps=sc["swarm.download_bps"], seed_upload_bps=sc["swarm.seed_upload_bps"],
        freerider_upload_bps=sc["swarm.freerider_upload_bps"],
        piece_selection=sc["swarm.piece_selection"], handout=sc["hm.tracker_handout"],
        join_spread_s=sc["swarm.join_spread_s"], leave_on_complete=sc["swarm.leave_on_complete"],
        duration_s=sc.duration, reannounce_s=sc["hm.reannounce_s"])


def _quantile(values: list[float], q: float) -> float:
    if not values:
        return math.nan
    ordered = sorted(values)
    return ordered[min(len(ordered) - 1, int(q * len(ordered)))]


def _swarm(run: _Run) -> None:
    sim = run.sim
    swarm = Swarm(sim, swarm_config(run.sc))
    run.topology_source = swarm.snapshot
    result = swarm.run()
    run.snapshot()
    for role, times in sorted(result.completion.items()):
        run.summary[f"swarm.{role}.completion_p50"] = _quantile(times, 0.5)
        run.summary[f"swarm.{role}.completion_p90"] = _quantile(times, 0.9)
        run.summary[f"swarm.{role}.completion_mean"] = statistics.fmean(times)
    run.summary["swarm.unfinished"] = result.unfinished
    run.summary["swarm.corrupt_pieces"] = result.corrupt_pieces
    if result.variance_at_half is not None:
        run.summary["swarm.replica_variance_50"] = result.variance_at_half


def _layered(run: _Run) -> None:
    sc, sim = run.sc, run.sim
    rng = sim.rng("workload")
    n = sc["scenario.nodes"]
    n_super = max(4, n // 10)
    snap = make_topology(sc, n_super, sim.rng("topology"))
    overlay = DumOverlay(sim, snap, peerview_max=sc["dum.peerview_max"],
                         seen_retention=sc["dum.seen_retention_s"])
    run.topology_source = overlay.snapshot
    ks = KeySpace(sc["dsm.m_bits"])
    indexes = {s: IndexServer(node_id=s, offer_limit=sc["hm.offer_limit"]) for s in snap.nodes}
    leaves = list(range(n_super, n))
    home = {leaf: rng.choice(snap.nodes) for leaf in leaves}
    files: dict[int, list[Descriptor]] = {leaf: [] for leaf in leaves}
    for i in range(sc["workload.publishes"]):
        leaf = rng.choice(leaves)
        files[leaf].append(Descriptor.for_body(f"track-{i}".encode(), leaf, ks))
    for leaf in leaves:
        sim.add_node(leaf)
        idx = indexes[home[leaf]]
        idx.register(leaf)
        idx.offer_files(leaf, files[leaf])
        for d in files[leaf]:
            overlay.publish(home[leaf], d)

    def on_leave(node: int) -> None:
        if node in home:
            indexes[home[node]].unregister(node)
            for d in files[node]:
                overlay.nodes[home[node]].store.drop(d)

    sim.leave_listeners.append(on_leave)
    run.churn(leaves)
    run.schedule_snapshots()
    keys = sorted({d.key for fs in files.values() for d in fs})
    settle = 2 * (sc["dum.ttl"] + 1) * max(sc["link.latency_s"], sc["link.latency_max_s"]) + 1.0
    local, remote, missed = [0], [0], [0]

    def query():
        live = [leaf for leaf in leaves if sim.is_alive(leaf)]
        if not live or not keys:
            return
        leaf, key = rng.choice(live), rng.choice(keys)
        sn = home[leaf]
        if indexes[sn].server_search(key):
            local[0] += 1
            sim.record("lm.local_hit", leaf, key)
            return
        trace = overlay.flood(sn, key, sc["dum.ttl"])

        def report():
            if trace.hits:
                remote[0] += 1
            else:
                missed[0] += 1
            sim.record("lm.flood_hit", trace.msg_id, bool(trace.hits))
        sim.call_at(sim.now + settle, report, "lm.report")

    for t in run.times(sc["workload.queries"]):
        sim.call_at(t, query, "lm.query")
    run.finish()
    total = local[0] + remote[0] + missed[0]
    run.summary.update({
        "lm.supernodes": n_super,
        "lm.local_hit_rate": local[0] / total if total else math.nan,
        "lm.flood_hit_rate": remote[0] / total if total else math.nan,
        "lm.miss_rate": missed[0] / total if total else math.nan,
    })


def _topology(run: _Run) -> None:
    sc, sim = run.sc, run.sim
    n = sc["scenario.nodes"]
    t = 0.0
    per_model: dict[str, list] = {}
    for model in ("er", "ws", "ba"):
        for r in range(sc["topology.runs"]):
            def measure(model=model, r=r):
                snap = make_topology(sc, n, sim.rng(f"topology:{model}:{r}"), model)
                run.snapshots[sim.now] = snap
                m = metrics(snap)
                subject = f"{model}:{r}"
                sim.record("topology.mean_degree", subject, m.mean_degree)
                sim.record("topology.clustering", subject, m.clustering_coefficient)
                sim.record("topology.avg_distance", subject, m.avg_connected_distance)
                sim.record("topology.diameter", subject, m.diameter)
                sim.record("topology.components", subject, m.component_count)
                per_model.setdefault(model, []).append(m)
                if model == "ba":
                    k = sc["topology.m_attach"]
                    fit = fit_power_law(m.degree_histogram, (2 * k, 20 * k))
                    sim.record("topology.tau", subject, fit.tau)
                    per_model.setdefault("ba.tau", []).append(fit.tau)
            sim.call_at(t, measure, "topology.measure")
            t += 1.0
    sim.run_until(max(t, sc.duration))
    for model in ("er", "ws", "ba"):
        ms = per_model.get(model, [])
        if ms:
            run.summary[f"topology.{model}.mean_degree"] = statistics.fmean(m.mean_degree for m in ms)
            run.summary[f"topology.{model}.clustering"] = statistics.fmean(m.clustering_coefficient for m in ms)
            run.summary[f"topology.{model}.avg_distance"] = statistics.fmean(m.avg_connected_distance for m in ms)
            run.summary[f"topology.{model}.diameter_max"] = max(m.diameter for m in ms)
    if per_model.get("ba.tau"):
        run.summary["topology.ba.tau_mean"] = statistics.fmean(per_model["ba.tau"])


WORKLOADS: dict[str, Callable[[_Run], None]] = {
    "flood": _flood, "lookup": _lookup, "storage": _storage, "hybrid": _hybrid,
    "swarm": _swarm, "layered": _layered, "topology": _topology,
}


def run(sc: Scenario) -> RunResult:
    workload = sc["scenario.workload"]
    if workload == "auto":
        workload = AUTO_WORKLOAD[sc["scenario.overlay"]]
    ctx = _Run(sc)
    WORKLOADS[workload](ctx)
    counters = Counter(ctx.sim.counters)
    for name in ("delivered", "dropped_dead", "dropped_loss", "sent"):
        ctx.summary[f"engine.{name}"] = counters[name]
    return RunResult(sc, ctx.sim.log, ctx.summary, ctx.snapshots, counters)


def format_summary(summary: dict[str, float]) -> str:
    lines = []
    for key in sorted(summary):
        value = summary[key]
        if isinstance(value, float) and not value.is_integer():
            lines.append(f"{key}: {value:.4f}")
        else:
            lines.append(f"{key}: {value}")
    return "\n".join(lines)


def write_outputs(result: RunResult, out: str | Path) -> Path:
    out = Path(out)
    out.mkdir(parents=True, exist_ok=True)
    result.log.write(out / "metrics.csv")
    summary = {k: (v if not isinstance(v, float) or math.isfinite(v) else repr(v))
               for k, v in result.summary.items()}
    (out / "summary.json").write_text(json.dumps(summary, indent=2, sort_keys=True) + "\n",
                                      encoding="utf-8")
    (out / "scenario.ini").write_text(result.scenario.dumps(), encoding="utf-8")
    return out

