"""Newline-delimited metrics records: ``time,metric_name,subject,value``."""

from __future__ import annotations

import math
import os
import tempfile
from dataclasses import dataclass
from pathlib import Path
from typing import Iterator


def format_value(value) -> str:
    if isinstance(value, bool):
        return "1" if value else "0"
    if isinstance(value, int):
        return str(value)
    if isinstance(value, float):
        if math.isinf(value):
            return "inf" if value > 0 else "-inf"
        return repr(value)
    return str(value)


def _parse_value(text: str):
    try:
        return int(text)
    except ValueError:
        pass
    try:
        return float(text)
    except ValueError:
        return text


@dataclass(frozen=True)
class Record:
    time: float
    name: str
    subject: str
    value: object

    def line(self) -> str:
        return f"{format_value(float(self.time))},{self.name},{self.subject},{format_value(self.value)}"


class MetricsLog:
    """Append-only record list; time must be non-decreasing."""

    def __init__(self):
        self.records: list[Record] = []

    def record(self, time: float, name: str, subject, value) -> None:
        if self.records and time < self.records[-1].time:
            raise ValueError(f"metrics time went backwards: {time} < {self.records[-1].time}")
        subject = str(subject)
        if "," in name or "," in subject or "\n" in subject:
            raise ValueError("metric names and subjects may not contain ',' or newlines")
        self.records.append(Record(float(time), name, subject, value))

    def __len__(self) -> int:
        return len(self.records)

    def __iter__(self) -> Iterator[Record]:
        return iter(self.records)

    def named(self, name: str) -> list[Record]:
        return [r for r in self.records if r.name == name]

    def values(self, name: str) -> list:
        return [r.value for r in self.records if r.name == name]

    def dumps(self) -> str:
        return "".join(r.line() + "\n" for r in self.records)

    def write(self, path: str | os.PathLike) -> None:
        """Flush the whole log atomically (write to a temp file, then rename)."""
        path = Path(path)
        path.parent.mkdir(parents=True, exist_ok=True)
        fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=".metrics-")
        try:
            with os.fdopen(fd, "w", encoding="utf-8", newline="\n") as fh:
                fh.write(self.dumps())
            os.replace(tmp, path)
        except BaseException:
            if os.path.exists(tmp):
                os.unlink(tmp)
            raise

    @classmethod
    def loads(cls, text: str) -> MetricsLog:
        log = cls()
        for line in text.splitlines():
            if not line:
                continue
            t, name, subject, value = line.split(",", 3)
            log.record(float(t), name, subject, _parse_value(value))
        return log
