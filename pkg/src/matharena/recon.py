"""Reconnaissance window and the live feed.

During the recon phase each team may query the AI about the upcoming
problems inside a single fixed-length window.  Prompts are public: every
prompt is broadcast to all participants as a PromptPosted feed event.
Responses are private: only the asking team's channel carries them.

Feed events carry a per-tournament gapless sequence starting at 0 and are
derived deterministically from journal records, so replaying a journal
regenerates the identical feed.  Private messages form a second, per-team
gapless sequence for the same reason.  Delivery is at-least-once; clients
dedup by sequence number and resume with from_sequence after a reconnect.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum


class WindowState(str, Enum):
    OPEN = "Open"
    CLOSED = "Closed"


@dataclass
class ReconWindow:
    opened_at_ms: int
    duration_s: int
    state: WindowState = WindowState.OPEN
    closed_at_ms: int | None = None

    @property
    def deadline_ms(self) -> int:
        return self.opened_at_ms + self.duration_s * 1000

    def accepts_at(self, now_ms: int) -> bool:
        return self.state is WindowState.OPEN and now_ms <= self.deadline_ms


@dataclass(frozen=True)
class ReconEntry:
    id: str
    team_id: str
    prompt: str
    query_id: str  # ledger record holding the private response
    timestamp_ms: int

    def to_payload(self) -> dict:
        return {
            "id": self.id,
            "team_id": self.team_id,
            "prompt": self.prompt,
            "query_id": self.query_id,
            "timestamp_ms": self.timestamp_ms,
        }

    @classmethod
    def from_payload(cls, payload: dict) -> "ReconEntry":
        return cls(
            id=payload["id"],
            team_id=payload["team_id"],
            prompt=payload["prompt"],
            query_id=payload["query_id"],
            timestamp_ms=payload["timestamp_ms"],
        )


class FeedKind(str, Enum):
    PROMPT_POSTED = "PromptPosted"
    WINDOW_OPENED = "WindowOpened"
    WINDOW_CLOSED = "WindowClosed"
    SCORE_CHANGED = "ScoreChanged"


@dataclass(frozen=True)
class FeedEvent:
    sequence: int
    kind: FeedKind
    clock_ms: int
    payload: dict

    def to_payload(self) -> dict:
        return {
            "sequence": self.sequence,
            "kind": self.kind.value,
            "clock_ms": self.clock_ms,
            "payload": self.payload,
        }


@dataclass(frozen=True)
class PrivateMessage:
    """One entry of a team's confidential AI transcript."""

    team_seq: int
    query_id: str
    round: str
    mode: str
    kind: str
    prompt: str
    answer: str
    clock_ms: int

    def to_payload(self) -> dict:
        return {
            "team_seq": self.team_seq,
            "query_id": self.query_id,
            "round": self.round,
            "mode": self.mode,
            "kind": self.kind,
            "prompt": self.prompt,
            "answer": self.answer,
            "clock_ms": self.clock_ms,
        }
