"""Normalized network-evidence records and session assembly.

Evidence reaches the engine as JSON Lines, one observed communication per
line, produced by a capture adapter outside this package. Security
properties that passive monitoring may fail to observe are tri-state:
``True``, ``False`` or ``None`` (unknown). Unknown never counts against
compliance.

A session groups the events of one task between two entities. The wire
never marks where such a task starts or ends, so assembly uses an explicit
``session_id`` when present plus a silence-gap heuristic; the gap rule is a
construction of this engine, not of any protocol.
"""

from __future__ import annotations

import json
import logging
from dataclasses import dataclass, field, fields
from enum import Enum
from pathlib import Path
from typing import Iterable

logger = logging.getLogger(__name__)

DEFAULT_SESSION_GAP_MS = 60_000

#: Payload markers standing in for deep-payload parsing. Adapters set them
#: when the corresponding content was observed inside a packet payload.
MARKER_FIELDS = (
    "access_list_transfer",
    "mobile_code",
    "audit_record",
    "record_timestamp",
    "ids_heartbeat",
    "snapshot_transfer",
)


class EvidenceError(ValueError):
    """Raised for malformed evidence input (carries line number and reason)."""


class IdScheme(str, Enum):
    """Identifier scheme of a communication endpoint."""

    IP = "IP"
    MAC = "MAC"
    USERNAME = "Username"
    PROCESS_ID = "ProcessId"
    EPC = "EPC"
    UCODE = "Ucode"
    NETBIOS = "NetBIOS"
    OTHER = "Other"


_SCHEMES = {s.value: s for s in IdScheme}
_AUTH_RESULTS = ("Success", "Failure")


@dataclass(frozen=True)
class EvidenceEvent:
    """One observed network communication record."""

    seq: int
    timestamp: int  # milliseconds since epoch
    src_id: str
    dst_id: str
    protocol: str
    id_scheme_src: IdScheme = IdScheme.OTHER
    id_scheme_dst: IdScheme = IdScheme.OTHER
    protocol_version: str | None = None
    port: int | None = None
    tls_present: bool | None = None
    cert_present: bool | None = None
    cipher_suite: str | None = None
    key_bits: int | None = None
    cleartext_password: str | None = None
    auth_result: str | None = None  # "Success" | "Failure"
    session_id: str | None = None
    error_code: str | None = None
    fragmented: bool = False
    bytes: int = 0
    direction_external: bool | None = None
    access_list_transfer: bool = False
    mobile_code: bool = False
    audit_record: bool = False
    record_timestamp: bool = False
    ids_heartbeat: bool = False
    snapshot_transfer: bool = False

    def pair(self) -> tuple[str, str]:
        """Unordered participant pair, canonically sorted."""
        return (self.src_id, self.dst_id) if self.src_id <= self.dst_id else (self.dst_id, self.src_id)


@dataclass
class Session:
    """All events of one task between two entities.

    Sessions partition their input stream: every event belongs to exactly
    one session, timestamps within a session are non-decreasing.
    """

    session_key: str
    participants: tuple[str, str]
    events: list[EvidenceEvent] = field(default_factory=list)

    @property
    def start(self) -> int:
        return self.events[0].timestamp

    @property
    def end(self) -> int:
        return self.events[-1].timestamp

    @property
    def total_bytes(self) -> int:
        return sum(e.bytes for e in self.events)

    @property
    def duration_ms(self) -> int:
        return self.end - self.start


_REQUIRED = ("timestamp", "src_id", "dst_id", "protocol")


def _event_from_record(record: dict, seq: int, line_no: int) -> EvidenceEvent:
    for name in _REQUIRED:
        if record.get(name) is None:
            raise EvidenceError(f"line {line_no}: missing {name}")

    def fail(reason: str) -> EvidenceError:
        return EvidenceError(f"line {line_no}: {reason}")

    timestamp = record["timestamp"]
    if not isinstance(timestamp, int) or timestamp < 0:
        raise fail(f"timestamp must be a non-negative integer, got {timestamp!r}")
    nbytes = record.get("bytes", 0)
    if not isinstance(nbytes, int) or nbytes < 0:
        raise fail(f"bytes must be a non-negative integer, got {nbytes!r}")
    key_bits = record.get("key_bits")
    if key_bits is not None and (not isinstance(key_bits, int) or key_bits <= 0):
        raise fail(f"key_bits must be a positive integer, got {key_bits!r}")
    port = record.get("port")
    if port is not None and not isinstance(port, int):
        raise fail(f"port must be an integer, got {port!r}")
    auth_result = record.get("auth_result")
    if auth_result is not None and auth_result not in _AUTH_RESULTS:
        raise fail(f"auth_result must be one of {_AUTH_RESULTS}, got {auth_result!r}")

    schemes = {}
    for side in ("id_scheme_src", "id_scheme_dst"):
        raw = record.get(side)
        if raw is None:
            schemes[side] = IdScheme.OTHER
        elif raw in _SCHEMES:
            schemes[side] = _SCHEMES[raw]
        else:
            raise fail(f"unknown identifier scheme {raw!r}")

    return EvidenceEvent(
        seq=seq,
        timestamp=timestamp,
        src_id=str(record["src_id"]),
        dst_id=str(record["dst_id"]),
        protocol=str(record["protocol"]),
        id_scheme_src=schemes["id_scheme_src"],
        id_scheme_dst=schemes["id_scheme_dst"],
        protocol_version=record.get("protocol_version"),
        port=port,
        tls_present=record.get("tls_present"),
        cert_present=record.get("cert_present"),
        cipher_suite=record.get("cipher_suite"),
        key_bits=key_bits,
        cleartext_password=record.get("cleartext_password"),
        auth_result=auth_result,
        session_id=record.get("session_id"),
        error_code=record.get("error_code"),
        fragmented=bool(record.get("fragmented", False)),
        bytes=nbytes,
        direction_external=record.get("direction_external"),
        access_list_transfer=bool(record.get("access_list_transfer", False)),
        mobile_code=bool(record.get("mobile_code", False)),
        audit_record=bool(record.get("audit_record", False)),
        record_timestamp=bool(record.get("record_timestamp", False)),
        ids_heartbeat=bool(record.get("ids_heartbeat", False)),
        snapshot_transfer=bool(record.get("snapshot_transfer", False)),
    )


def parse_evidence(lines: Iterable[str], strict: bool = True) -> list[EvidenceEvent]:
    """Parse a JSON Lines evidence stream into events in file order.

    ``seq`` is assigned 0..n-1 over the parsed events; any ``seq`` present
    in the input is ignored. In strict mode a malformed line raises
    :class:`EvidenceError` naming the line; in lenient mode it is skipped
    with a warning.
    """
    events: list[EvidenceEvent] = []
    for line_no, line in enumerate(lines, start=1):
        stripped = line.strip()
        if not stripped:
            continue
        try:
            record = json.loads(stripped)
            if not isinstance(record, dict):
                raise EvidenceError(f"line {line_no}: expected a JSON object")
            events.append(_event_from_record(record, seq=len(events), line_no=line_no))
        except EvidenceError:
            if strict:
                raise
            logger.warning("skipping malformed evidence line %d", line_no)
        except json.JSONDecodeError as exc:
            if strict:
                raise EvidenceError(f"line {line_no}: invalid JSON ({exc.msg})") from exc
            logger.warning("skipping unparseable evidence line %d", line_no)
    return events


def load_evidence(path: str | Path, strict: bool = True) -> list[EvidenceEvent]:
    """Read and parse an evidence file."""
    text = Path(path).read_text(encoding="utf-8")
    return parse_evidence(text.splitlines(), strict=strict)


_EVENT_FIELD_ORDER = [f.name for f in fields(EvidenceEvent)]


def event_to_record(event: EvidenceEvent) -> dict:
    """Serializable record; optional fields are omitted when absent."""
    record: dict = {}
    for name in _EVENT_FIELD_ORDER:
        value = getattr(event, name)
        if isinstance(value, IdScheme):
            if value is not IdScheme.OTHER:
                record[name] = value.value
            continue
        if name in MARKER_FIELDS or name == "fragmented":
            if value:
                record[name] = True
            continue
        if value is None:
            continue
        record[name] = value
    return record


def to_jsonl(events: Iterable[EvidenceEvent]) -> str:
    """Canonical JSON Lines serialization (sorted keys, compact, trailing newline)."""
    lines = [
        json.dumps(event_to_record(e), sort_keys=True, separators=(",", ":"), ensure_ascii=False)
        for e in events
    ]
    return "\n".join(lines) + ("\n" if lines else "")


def write_evidence(events: Iterable[EvidenceEvent], path: str | Path) -> None:
    Path(path).write_text(to_jsonl(events), encoding="utf-8")


def assemble_sessions(
    events: list[EvidenceEvent],
    gap_ms: int = DEFAULT_SESSION_GAP_MS,
    explicit_ids: bool = True,
) -> list[Session]:
    """Group events into sessions.

    Events are grouped by unordered participant pair, additionally keyed by
    ``session_id`` when ``explicit_ids`` is set and the event carries one.
    Within a group, a silence longer than ``gap_ms`` starts a new session.
    The result partitions the input and is deterministic for identical
    input and parameters.
    """
    if gap_ms <= 0:
        raise ValueError("gap_ms must be positive")

    groups: dict[tuple, list[EvidenceEvent]] = {}
    for event in events:
        sid = event.session_id if explicit_ids else None
        groups.setdefault((event.pair(), sid), []).append(event)

    sessions: list[Session] = []
    for (pair, sid), members in groups.items():
        members = sorted(members, key=lambda e: (e.timestamp, e.seq))
        chunk: list[EvidenceEvent] = []
        chunks: list[list[EvidenceEvent]] = []
        for event in members:
            if chunk and event.timestamp - chunk[-1].timestamp > gap_ms:
                chunks.append(chunk)
                chunk = []
            chunk.append(event)
        if chunk:
            chunks.append(chunk)
        base = f"{pair[0]}|{pair[1]}" + (f"|{sid}" if sid is not None else "")
        for index, part in enumerate(chunks):
            sessions.append(Session(session_key=f"{base}#{index}", participants=pair, events=part))

    sessions.sort(key=lambda s: (s.start, s.events[0].seq))
    return sessions
