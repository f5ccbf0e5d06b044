"""Line-oriented event trace: ``time,switch,event_kind,detail``."""

from __future__ import annotations

import csv
import hashlib
import io
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable

HEADER = ("time", "switch", "event_kind", "detail")

# Kinds produced by the data plane and controller; attacker bookkeeping never lands here.
SWITCH_EVENTS = {
    "packet_in", "rule_install", "rule_remove", "table_full", "forward", "deliver",
    "drop", "syn_proxy_reply", "silent_drop", "detection", "packet_out",
}


@dataclass(frozen=True)
class TraceRecord:
    time: float
    switch: str
    event_kind: str
    detail: str

    def row(self) -> tuple[str, str, str, str]:
        return (f"{self.time:.9f}", self.switch, self.event_kind, self.detail)


class Trace:
    def __init__(self, enabled: bool = True):
        self.enabled = enabled
        self.records: list[TraceRecord] = []

    def emit(self, time: float, switch: str, kind: str, detail: str = "") -> None:
        if self.enabled:
            self.records.append(TraceRecord(time, switch, kind, detail))

    def __len__(self) -> int:
        return len(self.records)

    def __iter__(self):
        return iter(self.records)

    def of_kind(self, kind: str) -> list[TraceRecord]:
        return [r for r in self.records if r.event_kind == kind]

    def switch_events(self) -> list[TraceRecord]:
        return [r for r in self.records if r.event_kind in SWITCH_EVENTS]

    def to_csv(self, records: Iterable[TraceRecord] | None = None) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(HEADER)
        for r in self.records if records is None else records:
            w.writerow(r.row())
        return buf.getvalue()

    def digest(self) -> str:
        return hashlib.sha256(self.to_csv().encode("utf-8")).hexdigest()

    def write(self, path: str | Path) -> None:
        Path(path).write_text(self.to_csv(), encoding="utf-8", newline="\n")
