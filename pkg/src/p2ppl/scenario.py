"""Scenario files: INI sections per module, flat dotted keys, strict validation.

Keys that appear before any section header belong to ``[scenario]``.  A
dotted key (``dsm.m_bits = 12``) is accepted in any section and addresses
its module directly.
"""

from __future__ import annotations

import configparser
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Callable

from .errors import InvalidValue, ParseError, UnknownKey

MAX_SEED = (1 << 64) - 1


@dataclass(frozen=True)
class Field:
    default: Any
    kind: type
    check: Callable[[Any], bool] | None = None
    choices: tuple[str, ...] | None = None
    doc: str = ""


def _positive(v) -> bool:
    return v > 0


def _non_negative(v) -> bool:
    return v >= 0


def _probability(v) -> bool:
    return 0.0 <= v <= 1.0


INF = math.inf

SCHEMA: dict[str, dict[str, Field]] = {
    "scenario": {
        "seed": Field(0, int, lambda v: 0 <= v <= MAX_SEED, doc="64-bit run seed"),
        "duration_s": Field(300.0, float, _positive),
        "overlay": Field("dsm", str, choices=("dum", "dsm", "hm", "lm")),
        "workload": Field("auto", str, choices=("auto", "flood", "lookup", "storage", "hybrid",
                                                "swarm", "layered", "topology"),
                          doc="auto picks by overlay"),
        "nodes": Field(64, int, _positive, doc="overlay population"),
        "snapshot_period_s": Field(0.0, float, _non_negative, doc="0 = start and end only"),
    },
    "link": {
        "latency_s": Field(0.05, float, _non_negative),
        "latency_max_s": Field(0.05, float, _non_negative, doc="> latency_s for a uniform range"),
        "loss_rate": Field(0.0, float, _probability),
    },
    "churn": {
        "mean_session_s": Field(INF, float, _positive, doc="inf disables churn"),
        "mean_offline_s": Field(60.0, float, _positive),
    },
    "topology": {
        "model": Field("er", str, choices=("er", "ws", "ba")),
        "alpha": Field(6.0, float, _positive, doc="ER mean degree"),
        "k_ring": Field(4, int, _positive, doc="WS neighbours per side"),
        "p_rewire": Field(0.1, float, _probability),
        "m_attach": Field(2, int, _positive, doc="BA edges per new node"),
        "runs": Field(3, int, _positive, doc="graphs per model in topology_suite"),
    },
    "dum": {
        "peerview_max": Field(32, int, _positive),
        "ttl": Field(4, int, _non_negative),
        "forward_prob": Field(1.0, float, _probability),
        "ping_period_s": Field(0.0, float, _non_negative, doc="0 disables periodic PING"),
        "seen_retention_s": Field(600.0, float, _positive),
    },
    "dsm": {
        "m_bits": Field(16, int, lambda v: 1 <= v <= 64),
        "stabilize_period_s": Field(5.0, float, _positive),
        "succ_list_len": Field(4, int, _positive),
        "audit_period_s": Field(0.0, float, _non_negative, doc="0 disables the audit timer"),
    },
    "hm": {
        "offer_limit": Field(200, int, _positive),
        "tracker_handout": Field(20, int, _positive),
        "reannounce_s": Field(1800.0, float, _positive),
    },
    "swarm": {
        "total_size": Field(64 << 20, int, _positive, doc="content bytes"),
        "piece_size": Field(262144, int, _positive),
        "block_size": Field(16384, int, _positive),
        "M": Field(5, int, _positive),
        "K": Field(1, int, _non_negative),
        "T1_s": Field(10.0, float, _positive),
        "T2_s": Field(30.0, float, _positive),
        "rate_window_s": Field(20.0, float, _positive),
        "snub_timeout_s": Field(60.0, float, _positive),
        "seed_count": Field(1, int, _positive),
        "leecher_count": Field(19, int, _non_negative),
        "freerider_count": Field(1, int, _non_negative),
        "poisoner_count": Field(0, int, _non_negative),
        "seed_upload_bps": Field(262144.0, float, _positive),
        "leecher_upload_bps": Field(262144.0, float, _positive),
        "freerider_upload_bps": Field(0.0, float, _non_negative),
        "download_bps": Field(1048576.0, float, _positive),
        "piece_selection": Field("rarest", str, choices=("rarest", "random")),
        "join_spread_s": Field(300.0, float, _non_negative),
        "leave_on_complete": Field(True, bool),
    },
    "reputation": {
        "enabled": Field(False, bool),
        "contributors": Field(10, int, _non_negative),
        "free_riders": Field(10, int, _non_negative),
        "chunk_mb": Field(9.28, float, _positive),
        "slot_rate_mbps": Field(1.0, float, _positive),
    },
    "consistency": {
        "mode": Field("none", str, choices=("none", "hm_notify", "dum_cache_expiry", "dsm_republish")),
        "lifetime_s": Field(INF, float, _positive),
        "republish_s": Field(INF, float, _positive),
    },
    "bootstrap": {
        "mode": Field("mediated", str, choices=("mediated", "peer_based")),
        "handout_size": Field(20, int, _positive),
    },
    "group": {
        "policy": Field("open", str, choices=("open", "monarchy", "voting")),
        "quorum": Field(0.5, float, lambda v: 0.0 < v <= 1.0),
    },
    "workload": {
        "publishes": Field(20, int, _non_negative),
        "queries": Field(50, int, _non_negative),
        "lookups": Field(1000, int, _non_negative),
        "start_s": Field(10.0, float, _non_negative),
        "interval_s": Field(1.0, float, _positive),
        "owner_departs_s": Field(INF, float, _positive, doc="inf = owners stay"),
        "probe_period_s": Field(5.0, float, _positive),
    },
}

ALIASES = {"scenario.duration": "scenario.duration_s"}


def format_value(value: Any) -> str:
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, float):
        return repr(value)
    return str(value)


def _convert(name: str, spec: Field, raw: str) -> Any:
    text = raw.strip()
    try:
        if spec.kind is bool:
            lowered = text.lower()
            if lowered in ("true", "yes", "on", "1"):
                value: Any = True
            elif lowered in ("false", "no", "off", "0"):
                value = False
            else:
                raise ValueError(text)
        elif spec.kind is int:
            value = int(text, 0)
        elif spec.kind is float:
            value = float(text)
            if math.isnan(value):
                raise ValueError(text)
        else:
            value = text
    except ValueError:
        raise InvalidValue(f"{name}: cannot read {raw!r} as {spec.kind.__name__}", name) from None
    if spec.choices is not None and value not in spec.choices:
        raise InvalidValue(f"{name}: {value!r} not one of {', '.join(spec.choices)}", name)
    if spec.check is not None and not spec.check(value):
        raise InvalidValue(f"{name}: {raw!r} out of range", name)
    return value


def _field(name: str) -> Field:
    section, _, key = name.partition(".")
    try:
        return SCHEMA[section][key]
    except KeyError:
        raise UnknownKey(f"unknown key {name!r}", name) from None


@dataclass
class Scenario:
    values: dict[str, Any] = field(default_factory=dict)

    def __post_init__(self):
        merged = {f"{s}.{k}": f.default for s, keys in SCHEMA.items() for k, f in keys.items()}
        for name, value in self.values.items():
            merged[name] = _convert(name, _field(name), format_value(value))
        self.values = merged
        self.validate()

    def __getitem__(self, name: str) -> Any:
        return self.values[name]

    def section(self, name: str) -> dict[str, Any]:
        prefix = name + "."
        return {k[len(prefix):]: v for k, v in self.values.items() if k.startswith(prefix)}

    def replace(self, **changes: Any) -> Scenario:
        """Copy with ``section__key=value`` overrides (``dsm__m_bits=10``)."""
        updated = dict(self.values)
        for arg, value in changes.items():
            updated[arg.replace("__", ".", 1)] = value
        return Scenario(updated)

    @property
    def seed(self) -> int:
        return self.values["scenario.seed"]

    @property
    def duration(self) -> float:
        return self.values["scenario.duration_s"]

    def validate(self) -> None:
        if self["swarm.piece_size"] % self["swarm.block_size"]:
            raise InvalidValue("swarm.block_size must divide swarm.piece_size", "swarm.block_size")
        if self["swarm.K"] > self["swarm.M"]:
            raise InvalidValue("swarm.K must not exceed swarm.M", "swarm.K")
        if self["link.latency_max_s"] < self["link.latency_s"]:
            raise InvalidValue("link.latency_max_s below link.latency_s", "link.latency_max_s")
        if (self["consistency.mode"] == "dsm_republish"
                and not self["consistency.republish_s"] < self["consistency.lifetime_s"]):
            raise InvalidValue("republish period must be shorter than the lifetime",
                               "consistency.republish_s")

    def dumps(self, *, only_changed: bool = False) -> str:
        lines: list[str] = []
        for section, keys in SCHEMA.items():
            body = []
            for key, spec in keys.items():
                value = self.values[f"{section}.{key}"]
                if only_changed and value == spec.default and type(value) is type(spec.default):
                    continue
                body.append(f"{key} = {format_value(value)}")
            if body:
                lines.append(f"[{section}]")
                lines.extend(body)
                lines.append("")
        return "\n".join(lines)


def loads_scenario(text: str) -> Scenario:
    parser = configparser.ConfigParser(interpolation=None, strict=False,
                                       default_section="__unused__", delimiters=("=",),
                                       inline_comment_prefixes=("#",))
    parser.optionxform = str  # keys are case-sensitive (swarm.M, swarm.T1_s)
    try:
        parser.read_string("[scenario]\n" + text)
    except configparser.Error as exc:
        raise ParseError(f"cannot parse scenario: {exc}") from None
    values: dict[str, Any] = {}
    for section in parser.sections():
        for key, raw in parser.items(section):
            name = key if "." in key else f"{section}.{key}"
            name = ALIASES.get(name, name)
            values[name] = _convert(name, _field(name), raw)
    return Scenario(values)


def load_scenario(path: str | Path) -> Scenario:
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise ParseError(f"cannot read {path}: {exc.strerror}") from None
    return loads_scenario(text)


def defaults_text() -> str:
    lines = []
    for section, keys in SCHEMA.items():
        lines.append(f"[{section}]")
        for key, spec in keys.items():
            note = f"  # {spec.doc}" if spec.doc else ""
            choice = f"  # one of: {', '.join(spec.choices)}" if spec.choices else ""
            lines.append(f"{key} = {format_value(spec.default)}{note or choice}")
        lines.append("")
    return "\n".join(lines)
