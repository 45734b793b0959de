"""Append-only match journal.

One file per tournament, UTF-8, line-delimited canonical JSON (sorted keys,
no spaces).  The first line is a header; every following line is a record:

    {"format": "match-journal", "version": 1}
    {"kind": "...", "payload": {...}, "sequence": 0, "timestamp_ms": 0}

Sequences start at 0 and are gapless.  Appends are flushed to the OS before
the caller acknowledges; fsync happens on sync() and close().  A truncated
final line (torn write) is discarded on open; any malformed line earlier in
the file, or a sequence gap, is corruption and refuses to load.  The exact
byte format is documented in docs/journal-format.md.
"""

from __future__ import annotations

import json
import os
from dataclasses import dataclass
from typing import Iterable, Iterator

from .errors import CorruptRecord, SequenceGap

JOURNAL_FORMAT = "match-journal"
JOURNAL_VERSION = 1

RECORD_KINDS = frozenset({
    "Created",
    "TeamRegistered",
    "PhaseChanged",
    "SubmissionFiled",
    "Judged",
    "PieceAwarded",
    "EntryAttempt",
    "QueryHandled",
    "ClaimAdjudicated",
    "ScoreEventEmitted",
    "WindowOpened",
    "WindowClosed",
    "ReconQuery",
})


@dataclass(frozen=True)
class Record:
    sequence: int
    timestamp_ms: int
    kind: str
    payload: dict


def encode_record(record: Record) -> str:
    return json.dumps(
        {
            "sequence": record.sequence,
            "timestamp_ms": record.timestamp_ms,
            "kind": record.kind,
            "payload": record.payload,
        },
        sort_keys=True,
        separators=(",", ":"),
        ensure_ascii=False,
    )


def decode_record(line: str, context: str = "") -> Record:
    try:
        raw = json.loads(line)
    except json.JSONDecodeError as exc:
        raise CorruptRecord(f"{context}: undecodable record: {exc}") from exc
    if not isinstance(raw, dict):
        raise CorruptRecord(f"{context}: record is not an object")
    try:
        sequence = raw["sequence"]
        timestamp = raw["timestamp_ms"]
        kind = raw["kind"]
        payload = raw["payload"]
    except KeyError as exc:
        raise CorruptRecord(f"{context}: missing field {exc}") from exc
    if not isinstance(sequence, int) or not isinstance(timestamp, int):
        raise CorruptRecord(f"{context}: non-integer sequence/timestamp")
    if kind not in RECORD_KINDS:
        raise CorruptRecord(f"{context}: unknown record kind {kind!r}")
    if not isinstance(payload, dict):
        raise CorruptRecord(f"{context}: payload is not an object")
    return Record(sequence, timestamp, kind, payload)


def _header_line() -> str:
    return json.dumps(
        {"format": JOURNAL_FORMAT, "version": JOURNAL_VERSION},
        sort_keys=True,
        separators=(",", ":"),
    )


def journal_lines(records: Iterable[Record]) -> Iterator[str]:
    """Header plus one canonical line per record; the export/transfer form."""
    yield _header_line()
    for record in records:
        yield encode_record(record)


def _check_header(line: str) -> None:
    try:
        header = json.loads(line)
    except json.JSONDecodeError as exc:
        raise CorruptRecord(f"bad journal header: {exc}") from exc
    if not isinstance(header, dict) or header.get("format") != JOURNAL_FORMAT:
        raise CorruptRecord("not a match journal")
    if header.get("version") != JOURNAL_VERSION:
        raise CorruptRecord(
            f"unsupported journal version {header.get('version')!r}"
        )


def read_journal(path: str) -> list[Record]:
    """Load and validate a journal file.

    A malformed *final* line is treated as a torn write and dropped; the
    same defect anywhere else raises CorruptRecord, as does a sequence gap
    or a missing header.
    """
    with open(path, "rb") as fh:
        data = fh.read()
    lines = data.decode("utf-8").split("\n")
    if lines and lines[-1] == "":
        lines.pop()
    if not lines:
        raise CorruptRecord("journal is empty")
    _check_header(lines[0])
    records: list[Record] = []
    last = len(lines) - 1
    for index, line in enumerate(lines[1:], start=1):
        try:
            record = decode_record(line, context=f"line {index + 1}")
        except CorruptRecord:
            if index == last and not data.endswith(b"\n"):
                break  # torn final write; keep the intact prefix
            raise
        if record.sequence != len(records):
            raise CorruptRecord(
                f"line {index + 1}: sequence {record.sequence}, "
                f"expected {len(records)}"
            )
        records.append(record)
    return records


class Journal:
    """Writer with an optional backing file.

    With no path the journal is memory-only (fast tests); with a path every
    append is written and flushed before returning.
    """

    def __init__(self, path: str | None = None):
        self.path = path
        self.records: list[Record] = []
        self._fh = None
        if path is not None:
            self._fh = open(path, "a+", encoding="utf-8", newline="\n")
            if self._fh.tell() == 0:
                self._fh.write(_header_line() + "\n")
                self._fh.flush()

    @classmethod
    def resume(cls, path: str) -> "Journal":
        """Reopen an existing journal, discarding a torn final line."""
        records = read_journal(path)
        # recompute the byte length of the intact prefix and truncate so a
        # partial trailing line can never merge with the next append
        keep = len(_header_line().encode("utf-8")) + 1
        with open(path, "rb") as fh:
            raw_lines = fh.read().split(b"\n")
        for i, record in enumerate(records):
            keep += len(raw_lines[i + 1]) + 1
        with open(path, "rb+") as fh:
            fh.truncate(keep)
        journal = cls.__new__(cls)
        journal.path = path
        journal.records = records
        journal._fh = open(path, "a", encoding="utf-8", newline="\n")
        return journal

    @property
    def next_sequence(self) -> int:
        return len(self.records)

    def append(self, record: Record) -> None:
        if record.sequence != self.next_sequence:
            raise SequenceGap(
                f"appending sequence {record.sequence}, "
                f"expected {self.next_sequence}"
            )
        if self._fh is not None:
            self._fh.write(encode_record(record) + "\n")
            self._fh.flush()
        self.records.append(record)

    def sync(self) -> None:
        if self._fh is not None:
            self._fh.flush()
            os.fsync(self._fh.fileno())

    def close(self) -> None:
        if self._fh is not None:
            self.sync()
            self._fh.close()
            self._fh = None

    def __iter__(self) -> Iterator[Record]:
        return iter(self.records)
