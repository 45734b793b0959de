"""Tournament lifecycle engine.

State is event-sourced: the only way anything mutates is
``Tournament.apply(record)``, and live operations work by validating input,
building journal records (consuming rng and embedding every draw's outcome
in the payload), appending them, then applying them.  Replaying the journal
therefore reconstructs the live state exactly, including the public feed
and each team's private transcript, which are derived inside apply().

Phases run strictly forward:

    Registration -> Round1 -> Round2 -> Round3Recon -> Round3Solve
        -> Round3Presentation -> Finished

Round 1 admission gates AI access: six puzzle pieces (configurable) earned
by judged-correct solutions unlock a passcode attempt with a bounded number
of tries.  Leaving Round 2 settles AI-quota penalties exactly once per team.

Concurrency: one logical writer per tournament.  Match serializes every
mutating operation behind a lock; reads take the same lock briefly and
return snapshots.  Channel subscribers get bounded queues and are dropped
(to reconnect with from_sequence) rather than ever blocking the writer.
"""

from __future__ import annotations

import secrets
import threading
import time
import queue as queue_module
from dataclasses import dataclass, field
from enum import Enum
from fractions import Fraction
from random import Random
from typing import Iterable

from . import aiproxy, scoring
from .aiproxy import (
    ClaimVerdict,
    DeceptionClaim,
    QueryMode,
    QueryRecord,
)
from .errors import (
    AlreadyAdjudicated,
    AlreadyAwarded,
    AlreadyFinished,
    AlreadyJudged,
    AlreadyOpened,
    BadRequest,
    CorruptRecord,
    DuplicateName,
    EmptyQuery,
    Forbidden,
    InvalidConfig,
    MarksMismatch,
    NotAdmitted,
    NotCorrect,
    NotFound,
    OutOfRange,
    ForeignQuery,
    ProviderUnavailable,
    Unauthorized,
    UnknownHintId,
    WindowClosed,
    WrongPhase,
)
from .journal import Journal, Record, read_journal
from .llmclient import ProviderClient
from .recon import (
    FeedEvent,
    FeedKind,
    PrivateMessage,
    ReconEntry,
    ReconWindow,
    WindowState,
)
from .scoring import (
    HintMark,
    Rule,
    ScoreEvent,
    Verdict,
    exact_fraction,
    points_str,
    quota_delta,
    solution_delta,
    tenths_from_points,
)


class Phase(str, Enum):
    REGISTRATION = "Registration"
    ROUND1 = "Round1"
    ROUND2 = "Round2"
    ROUND3_RECON = "Round3Recon"
    ROUND3_SOLVE = "Round3Solve"
    ROUND3_PRESENTATION = "Round3Presentation"
    FINISHED = "Finished"


PHASE_ORDER = [
    Phase.REGISTRATION,
    Phase.ROUND1,
    Phase.ROUND2,
    Phase.ROUND3_RECON,
    Phase.ROUND3_SOLVE,
    Phase.ROUND3_PRESENTATION,
    Phase.FINISHED,
]

# which phase accepts submissions for which round
SUBMISSION_PHASES = {
    Phase.ROUND1: "R1",
    Phase.ROUND2: "R2",
    Phase.ROUND3_SOLVE: "R3",
}

CLAIM_PHASES = frozenset({
    Phase.ROUND2,
    Phase.ROUND3_RECON,
    Phase.ROUND3_SOLVE,
    Phase.ROUND3_PRESENTATION,
})


def next_phase(phase: Phase) -> Phase:
    index = PHASE_ORDER.index(phase)
    if index + 1 >= len(PHASE_ORDER):
        raise AlreadyFinished("tournament is finished")
    return PHASE_ORDER[index + 1]


class Role(str, Enum):
    ADMIN = "admin"
    JUDGE = "judge"
    TEAM = "team"
    SPECTATOR = "spectator"


@dataclass(frozen=True)
class Actor:
    role: Role
    team_id: str | None = None
    label: str = ""

    def display(self) -> str:
        return self.label or self.role.value


ADMIN = Actor(Role.ADMIN, label="admin")


# --- clocks ---

class RealClock:
    """Monotonic milliseconds since construction."""

    def __init__(self):
        self._start = time.monotonic()

    @property
    def simulated(self) -> bool:
        return False

    def now_ms(self) -> int:
        return int((time.monotonic() - self._start) * 1000)


class SimulatedClock:
    """Manually advanced clock for tests and deterministic simulation."""

    def __init__(self, start_ms: int = 0):
        self._now = start_ms

    @property
    def simulated(self) -> bool:
        return True

    def now_ms(self) -> int:
        return self._now

    def advance(self, delta_ms: int) -> int:
        if delta_ms < 0:
            raise OutOfRange("clock can only move forward")
        self._now += delta_ms
        return self._now


# --- configuration ---

@dataclass(frozen=True)
class TournamentConfig:
    quota_min_queries: int = 15
    quota_penalty_per_missing: float | str = 0.5
    recon_duration_s: int = 900
    ai_interaction_weight: float | str = 0.30
    puzzle_piece_count: int = 6
    max_entry_attempts: int = 3
    strategy_flaw_probability: float = 1.0
    glitch_probability: float = 0.5
    rng_seed: int = 0
    passcode: str = "314159"
    recon_mode: QueryMode = QueryMode.ADVISOR
    round1_counts_toward_total: bool = False
    round3_max_solution_points: float | str = 5
    simulated_clock: bool = False

    def validate(self) -> None:
        if self.quota_min_queries < 0:
            raise InvalidConfig("quota_min_queries must be >= 0")
        penalty = exact_fraction(self.quota_penalty_per_missing)
        if penalty < 0:
            raise InvalidConfig("quota_penalty_per_missing must be >= 0")
        if (penalty * 10).denominator != 1:
            raise InvalidConfig("quota_penalty_per_missing must be a multiple of 0.1")
        if self.recon_duration_s <= 0:
            raise InvalidConfig("recon_duration_s must be positive")
        weight = exact_fraction(self.ai_interaction_weight)
        if not 0 <= weight <= 1:
            raise InvalidConfig("ai_interaction_weight must lie in [0, 1]")
        if self.puzzle_piece_count < 1:
            raise InvalidConfig("puzzle_piece_count must be >= 1")
        if self.max_entry_attempts < 1:
            raise InvalidConfig("max_entry_attempts must be >= 1")
        for name in ("strategy_flaw_probability", "glitch_probability"):
            p = getattr(self, name)
            if not isinstance(p, (int, float)) or not 0 <= p <= 1:
                raise InvalidConfig(f"{name} must lie in [0, 1]")
        if not 0 <= self.rng_seed < 2 ** 64:
            raise InvalidConfig("rng_seed must fit in 64 bits")
        if not self.passcode:
            raise InvalidConfig("passcode must be non-empty")
        if exact_fraction(self.round3_max_solution_points) <= 0:
            raise InvalidConfig("round3_max_solution_points must be positive")

    @property
    def penalty_tenths(self) -> int:
        return tenths_from_points(self.quota_penalty_per_missing)

    @property
    def weight(self) -> Fraction:
        return exact_fraction(self.ai_interaction_weight)

    def to_payload(self) -> dict:
        return {
            "quota_min_queries": self.quota_min_queries,
            "quota_penalty_per_missing": str(self.quota_penalty_per_missing),
            "recon_duration_s": self.recon_duration_s,
            "ai_interaction_weight": str(self.ai_interaction_weight),
            "puzzle_piece_count": self.puzzle_piece_count,
            "max_entry_attempts": self.max_entry_attempts,
            "strategy_flaw_probability": self.strategy_flaw_probability,
            "glitch_probability": self.glitch_probability,
            "rng_seed": self.rng_seed,
            "passcode": self.passcode,
            "recon_mode": self.recon_mode.value,
            "round1_counts_toward_total": self.round1_counts_toward_total,
            "round3_max_solution_points": str(self.round3_max_solution_points),
            "simulated_clock": self.simulated_clock,
        }

    @classmethod
    def from_payload(cls, payload: dict) -> "TournamentConfig":
        try:
            return cls(
                quota_min_queries=payload["quota_min_queries"],
                quota_penalty_per_missing=payload["quota_penalty_per_missing"],
                recon_duration_s=payload["recon_duration_s"],
                ai_interaction_weight=payload["ai_interaction_weight"],
                puzzle_piece_count=payload["puzzle_piece_count"],
                max_entry_attempts=payload["max_entry_attempts"],
                strategy_flaw_probability=payload["strategy_flaw_probability"],
                glitch_probability=payload["glitch_probability"],
                rng_seed=payload["rng_seed"],
                passcode=payload["passcode"],
                recon_mode=QueryMode(payload["recon_mode"]),
                round1_counts_toward_total=payload["round1_counts_toward_total"],
                round3_max_solution_points=payload["round3_max_solution_points"],
                simulated_clock=payload["simulated_clock"],
            )
        except KeyError as exc:
            raise InvalidConfig(f"config payload missing {exc}") from exc

    @classmethod
    def from_dict(cls, data: dict) -> "TournamentConfig":
        """Lenient constructor for api/CLI input: unknown keys rejected."""
        known = set(cls.__dataclass_fields__)
        unknown = set(data) - known
        if unknown:
            raise InvalidConfig(f"unknown config keys: {sorted(unknown)}")
        if "recon_mode" in data:
            try:
                data = {**data, "recon_mode": QueryMode(data["recon_mode"])}
            except ValueError as exc:
                raise InvalidConfig(str(exc)) from exc
        config = cls(**data)
        config.validate()
        return config


# --- teams and submissions ---

class EntryResult(str, Enum):
    ADMITTED = "Admitted"
    REJECTED = "Rejected"
    LOCKED_OUT = "LockedOut"


@dataclass
class Team:
    id: str
    name: str
    puzzle_pieces: int = 0
    entry_attempts_used: int = 0
    round2_query_count: int = 0
    active: bool = True
    admitted: bool = False
    pieces_awarded_for: set[str] = field(default_factory=set)
    presentation_tenths: int | None = None

    def public_view(self) -> dict:
        return {
            "id": self.id,
            "name": self.name,
            "puzzle_pieces": self.puzzle_pieces,
            "active": self.active,
            "admitted": self.admitted,
        }

    def own_view(self) -> dict:
        view = self.public_view()
        view["entry_attempts_used"] = self.entry_attempts_used
        view["round2_query_count"] = self.round2_query_count
        return view


@dataclass
class Submission:
    id: str
    team_id: str
    problem_id: str
    round: str
    payload: str
    cited_hints: tuple[str, ...]
    filed_ms: int
    verdict: Verdict = Verdict.PENDING
    hint_marks: dict[str, HintMark] = field(default_factory=dict)
    judge_id: str | None = None

    def to_payload(self) -> dict:
        return {
            "id": self.id,
            "team_id": self.team_id,
            "problem_id": self.problem_id,
            "round": self.round,
            "payload": self.payload,
            "cited_hints": list(self.cited_hints),
            "filed_ms": self.filed_ms,
        }

    def view(self) -> dict:
        return {
            "id": self.id,
            "team_id": self.team_id,
            "problem_id": self.problem_id,
            "round": self.round,
            "payload": self.payload,
            "cited_hints": list(self.cited_hints),
            "verdict": self.verdict.value,
            "hint_marks": {k: v.value for k, v in self.hint_marks.items()},
            "judge_id": self.judge_id,
            "filed_ms": self.filed_ms,
        }


# --- event-sourced state ---

class Tournament:
    """Pure state; mutated only by apply()."""

    def __init__(self):
        self.id: str | None = None
        self.config: TournamentConfig | None = None
        self.phase: Phase = Phase.REGISTRATION
        self.clock_ms: int = 0
        self.applied: int = 0
        self.teams: dict[str, Team] = {}
        self.submissions: dict[str, Submission] = {}
        self.queries: dict[str, QueryRecord] = {}
        self.claims: dict[str, DeceptionClaim] = {}
        self.score_events: list[ScoreEvent] = []
        self.totals_tenths: dict[str, int] = {}
        self.window: ReconWindow | None = None
        self.recon_entries: list[ReconEntry] = []
        self.feed: list[FeedEvent] = []
        self.private: dict[str, list[PrivateMessage]] = {}

    # -- derived stream helpers --

    def _emit_feed(self, kind: FeedKind, clock_ms: int, payload: dict) -> None:
        self.feed.append(FeedEvent(len(self.feed), kind, clock_ms, payload))

    def _emit_private(self, record: QueryRecord) -> None:
        transcript = self.private.setdefault(record.team_id, [])
        transcript.append(PrivateMessage(
            team_seq=len(transcript),
            query_id=record.id,
            round=record.round,
            mode=record.mode.value,
            kind=record.kind.value,
            prompt=record.prompt,
            answer=record.emitted_answer,
            clock_ms=record.timestamp_ms,
        ))

    # -- application --

    def apply(self, record: Record) -> None:
        if record.sequence != self.applied:
            raise CorruptRecord(
                f"applying sequence {record.sequence}, expected {self.applied}"
            )
        handler = getattr(self, "_apply_" + _snake(record.kind), None)
        if handler is None:
            raise CorruptRecord(f"no handler for record kind {record.kind!r}")
        try:
            handler(record)
        except (KeyError, ValueError, TypeError) as exc:
            raise CorruptRecord(
                f"sequence {record.sequence} ({record.kind}): {exc!r}"
            ) from exc
        self.clock_ms = max(self.clock_ms, record.timestamp_ms)
        self.applied += 1

    def _apply_created(self, record: Record) -> None:
        self.id = record.payload["tournament_id"]
        self.config = TournamentConfig.from_payload(record.payload["config"])
        self.phase = Phase.REGISTRATION

    def _apply_team_registered(self, record: Record) -> None:
        team = Team(record.payload["team_id"], record.payload["name"])
        self.teams[team.id] = team
        self.totals_tenths[team.id] = 0
        self.private.setdefault(team.id, [])

    def _apply_phase_changed(self, record: Record) -> None:
        self.phase = Phase(record.payload["to"])

    def _apply_submission_filed(self, record: Record) -> None:
        data = record.payload["submission"]
        submission = Submission(
            id=data["id"],
            team_id=data["team_id"],
            problem_id=data["problem_id"],
            round=data["round"],
            payload=data["payload"],
            cited_hints=tuple(data["cited_hints"]),
            filed_ms=data["filed_ms"],
        )
        self.submissions[submission.id] = submission

    def _apply_judged(self, record: Record) -> None:
        submission = self.submissions[record.payload["submission_id"]]
        submission.verdict = Verdict(record.payload["verdict"])
        submission.judge_id = record.payload["judge_id"]
        submission.hint_marks = {
            hint: HintMark(mark)
            for hint, mark in record.payload["hint_marks"].items()
        }

    def _apply_piece_awarded(self, record: Record) -> None:
        team = self.teams[record.payload["team_id"]]
        team.pieces_awarded_for.add(record.payload["problem_id"])
        team.puzzle_pieces = len(team.pieces_awarded_for)

    def _apply_entry_attempt(self, record: Record) -> None:
        team = self.teams[record.payload["team_id"]]
        team.entry_attempts_used = record.payload["attempts_used"]
        team.admitted = record.payload["admitted"]

    def _apply_query_handled(self, record: Record) -> None:
        query = QueryRecord.from_payload(record.payload["query"])
        self.queries[query.id] = query
        if query.round == "R2":
            self.teams[query.team_id].round2_query_count += 1
        self._emit_private(query)

    def _apply_claim_adjudicated(self, record: Record) -> None:
        claim = DeceptionClaim.from_payload(record.payload["claim"])
        self.claims[claim.id] = claim

    def _apply_score_event_emitted(self, record: Record) -> None:
        data = record.payload["event"]
        event = ScoreEvent(
            id=data["id"],
            team_id=data["team_id"],
            rule=Rule(data["rule"]),
            delta_tenths=data["delta_tenths"],
            source_ref=data["source_ref"],
            timestamp_ms=record.timestamp_ms,
        )
        self.score_events.append(event)
        self.totals_tenths[event.team_id] += event.delta_tenths
        if event.rule is Rule.ROUND3_PRESENTATION:
            self.teams[event.team_id].presentation_tenths = event.delta_tenths
        self._emit_feed(FeedKind.SCORE_CHANGED, record.timestamp_ms, {
            "team_id": event.team_id,
            "rule": event.rule.value,
            "delta_tenths": event.delta_tenths,
            "total_tenths": self.totals_tenths[event.team_id],
        })

    def _apply_window_opened(self, record: Record) -> None:
        self.window = ReconWindow(
            opened_at_ms=record.payload["opened_at_ms"],
            duration_s=record.payload["duration_s"],
        )
        self._emit_feed(FeedKind.WINDOW_OPENED, record.timestamp_ms, {
            "opened_at_ms": self.window.opened_at_ms,
            "duration_s": self.window.duration_s,
            "deadline_ms": self.window.deadline_ms,
        })

    def _apply_window_closed(self, record: Record) -> None:
        window = self.window
        if window is None:
            raise CorruptRecord("WindowClosed without a window")
        window.state = WindowState.CLOSED
        window.closed_at_ms = record.payload["closed_at_ms"]
        self._emit_feed(FeedKind.WINDOW_CLOSED, record.timestamp_ms, {
            "closed_at_ms": window.closed_at_ms,
        })

    def _apply_recon_query(self, record: Record) -> None:
        entry = ReconEntry.from_payload(record.payload["entry"])
        self.recon_entries.append(entry)
        self._emit_feed(FeedKind.PROMPT_POSTED, record.timestamp_ms, {
            "entry_id": entry.id,
            "team_id": entry.team_id,
            "team_name": self.teams[entry.team_id].name,
            "prompt": entry.prompt,
        })


def _snake(kind: str) -> str:
    out = []
    for ch in kind:
        if ch.isupper() and out:
            out.append("_")
        out.append(ch.lower())
    return "".join(out)


def replay_records(records: Iterable[Record]) -> Tournament:
    state = Tournament()
    count = 0
    for record in records:
        state.apply(record)
        count += 1
    if count == 0 or state.id is None:
        raise CorruptRecord("journal holds no Created record")
    return state


def replay_journal(path: str) -> Tournament:
    return replay_records(read_journal(path))


# --- channel subscriptions ---

@dataclass
class Subscription:
    id: int
    team_id: str | None
    queue: "queue_module.Queue[tuple[str, object]]"
    alive: bool = True


# --- the runtime ---

class Match:
    """Single-writer runtime around one Tournament."""

    def __init__(self, state: Tournament, journal: Journal, clock,
                 provider: ProviderClient | None, rng: Random):
        self.state = state
        self.journal = journal
        self.clock = clock
        self.provider = provider
        self.rng = rng
        self._lock = threading.RLock()
        self._pending_claims: dict[str, DeceptionClaim] = {}
        # claim ids must never repeat, even across a crash that dropped
        # pending (unjournaled) claims, so restart above the highest survivor
        self._claim_counter = max(
            (int(cid.rsplit("-", 1)[1]) for cid in state.claims),
            default=0,
        )
        self._subscribers: dict[int, Subscription] = {}
        self._sub_counter = 0
        self._window_timer: threading.Timer | None = None

    # -- construction --

    @classmethod
    def create(cls, config: TournamentConfig, *, tournament_id: str | None = None,
               journal: Journal | None = None,
               provider: ProviderClient | None = None,
               clock=None) -> "Match":
        config.validate()
        if clock is None:
            clock = SimulatedClock() if config.simulated_clock else RealClock()
        if config.simulated_clock and not clock.simulated:
            raise InvalidConfig("config demands a simulated clock")
        match = cls(Tournament(), journal or Journal(), clock, provider,
                    Random(config.rng_seed))
        match._commit("Created", {
            "tournament_id": tournament_id or "t-" + secrets.token_hex(6),
            "config": config.to_payload(),
        })
        return match

    @classmethod
    def resume(cls, journal_path: str, *, provider: ProviderClient | None = None,
               clock=None) -> "Match":
        """Rebuild a match from its journal and continue appending to it."""
        journal = Journal.resume(journal_path)
        state = replay_records(journal.records)
        if clock is None:
            clock = (SimulatedClock(state.clock_ms)
                     if state.config.simulated_clock else RealClock())
        # continuing the original rng stream exactly isn't possible (draw
        # counts aren't recorded), so derive a fresh deterministic stream
        rng = Random((state.config.rng_seed << 32) ^ state.applied)
        match = cls(state, journal, clock, provider, rng)
        match._arm_window_timer()
        return match

    # -- internals --

    def _now_ms(self) -> int:
        return max(self.state.clock_ms, self.clock.now_ms())

    def _commit(self, kind: str, payload: dict, timestamp_ms: int | None = None) -> Record:
        record = Record(
            sequence=self.journal.next_sequence,
            timestamp_ms=self._now_ms() if timestamp_ms is None else timestamp_ms,
            kind=kind,
            payload=payload,
        )
        feed_before = len(self.state.feed)
        private_before = {t: len(v) for t, v in self.state.private.items()}
        self.journal.append(record)
        self.state.apply(record)
        self._notify(feed_before, private_before)
        return record

    def _notify(self, feed_before: int, private_before: dict[str, int]) -> None:
        new_feed = self.state.feed[feed_before:]
        for sub in self._subscribers.values():
            if not sub.alive:
                continue
            for event in new_feed:
                self._push(sub, ("feed", event))
            if sub.team_id is not None:
                transcript = self.state.private.get(sub.team_id, [])
                for msg in transcript[private_before.get(sub.team_id, 0):]:
                    self._push(sub, ("private", msg))

    @staticmethod
    def _push(sub: Subscription, item: tuple[str, object]) -> None:
        try:
            sub.queue.put_nowait(item)
        except queue_module.Full:
            # never block the writer; the client reconnects and resumes
            sub.alive = False

    def _require(self, actor: Actor, *roles: Role) -> None:
        if actor.role not in roles:
            raise Forbidden(
                f"{actor.role.value} may not perform this operation"
            )

    def _team_for(self, actor: Actor) -> Team:
        self._require(actor, Role.TEAM)
        team = self.state.teams.get(actor.team_id or "")
        if team is None:
            raise Unauthorized("token names an unknown team")
        if not team.active:
            raise Forbidden("team is not active")
        return team

    def _require_phase(self, *phases: Phase) -> None:
        if self.state.phase not in phases:
            raise WrongPhase(
                f"operation not available in phase {self.state.phase.value}"
            )

    # -- lifecycle operations --

    def register_team(self, name: str, actor: Actor = ADMIN) -> Team:
        with self._lock:
            self._require(actor, Role.ADMIN)
            self._require_phase(Phase.REGISTRATION)
            name = name.strip()
            if not name or len(name) > 80:
                raise BadRequest("team name must be 1..80 characters")
            if any(t.name == name for t in self.state.teams.values()):
                raise DuplicateName(f"team name {name!r} is taken")
            team_id = f"team-{len(self.state.teams) + 1}"
            self._commit("TeamRegistered", {"team_id": team_id, "name": name})
            return self.state.teams[team_id]

    def advance_phase(self, actor: Actor = ADMIN) -> Phase:
        with self._lock:
            self._require(actor, Role.ADMIN)
            leaving = self.state.phase
            target = next_phase(leaving)
            if (leaving is Phase.ROUND3_RECON and self.state.window is not None
                    and self.state.window.state is WindowState.OPEN):
                self._commit("WindowClosed", {"closed_at_ms": self._now_ms()})
            self._commit("PhaseChanged", {
                "from": leaving.value, "to": target.value,
            })
            if leaving is Phase.ROUND2:
                self._settle_quota_penalties()
            self.journal.sync()
            return self.state.phase

    def _settle_quota_penalties(self) -> None:
        # the quota binds only teams that actually held AI access
        config = self.state.config
        for team in self.state.teams.values():
            if not (team.active and team.admitted):
                continue
            delta = quota_delta(team.round2_query_count,
                                config.quota_min_queries,
                                config.penalty_tenths)
            if delta < 0:
                self._emit_score(team.id, Rule.QUOTA_PENALTY, delta,
                                 source_ref="round2-close")

    def _emit_score(self, team_id: str, rule: Rule, delta_tenths: int,
                    source_ref: str) -> ScoreEvent:
        event_id = f"ev-{len(self.state.score_events) + 1}"
        self._commit("ScoreEventEmitted", {"event": {
            "id": event_id,
            "team_id": team_id,
            "rule": rule.value,
            "delta_tenths": delta_tenths,
            "source_ref": source_ref,
        }})
        return self.state.score_events[-1]

    # -- round 1: pieces and the entry gate --

    def submit_solution(self, actor: Actor, problem_id: str, payload: str,
                        cited_hints: Iterable[str] = ()) -> Submission:
        with self._lock:
            team = self._team_for(actor)
            round_tag = SUBMISSION_PHASES.get(self.state.phase)
            if round_tag is None:
                raise WrongPhase(
                    f"submissions are closed in phase {self.state.phase.value}"
                )
            problem_id = problem_id.strip()
            if not problem_id:
                raise BadRequest("problem_id must be non-empty")
            cited = list(dict.fromkeys(cited_hints))
            for hint_id in cited:
                query = self.state.queries.get(hint_id)
                if query is None or query.team_id != team.id:
                    raise UnknownHintId(f"hint {hint_id!r} is not yours to cite")
            submission_id = f"sub-{len(self.state.submissions) + 1}"
            self._commit("SubmissionFiled", {"submission": {
                "id": submission_id,
                "team_id": team.id,
                "problem_id": problem_id,
                "round": round_tag,
                "payload": payload,
                "cited_hints": cited,
                "filed_ms": self._now_ms(),
            }})
            return self.state.submissions[submission_id]

    def judge_solution(self, actor: Actor, submission_id: str, verdict: Verdict,
                       hint_marks: dict[str, HintMark] | None = None) -> Submission:
        with self._lock:
            self._require(actor, Role.JUDGE, Role.ADMIN)
            submission = self.state.submissions.get(submission_id)
            if submission is None:
                raise NotFound(f"no submission {submission_id!r}")
            if submission.verdict is not Verdict.PENDING:
                raise AlreadyJudged(f"{submission_id} already has a verdict")
            if verdict is Verdict.PENDING:
                raise BadRequest("a verdict cannot be Pending")
            marks = dict(hint_marks or {})
            if set(marks) != set(submission.cited_hints):
                raise MarksMismatch(
                    "hint_marks must cover exactly the cited hints"
                )
            self._commit("Judged", {
                "submission_id": submission_id,
                "judge_id": actor.display(),
                "verdict": verdict.value,
                "hint_marks": {k: v.value for k, v in marks.items()},
            })
            config = self.state.config
            scored = submission.round != "R1" or config.round1_counts_toward_total
            if scored:
                delta = solution_delta(verdict)
                if delta is not None:
                    rule = (Rule.CORRECT_SOLUTION if verdict is Verdict.CORRECT
                            else Rule.PARTIAL_SOLUTION)
                    self._emit_score(submission.team_id, rule, delta,
                                     source_ref=submission_id)
                for hint_id in submission.cited_hints:
                    outcome = scoring.hint_delta(
                        marks[hint_id], self.state.queries[hint_id].falsified
                    )
                    if outcome is not None:
                        hint_rule, hint_tenths = outcome
                        self._emit_score(submission.team_id, hint_rule,
                                         hint_tenths, source_ref=hint_id)
            return submission

    def award_puzzle_piece(self, actor: Actor, team_id: str,
                           problem_id: str) -> Team:
        with self._lock:
            self._require(actor, Role.JUDGE, Role.ADMIN)
            self._require_phase(Phase.ROUND1)
            team = self.state.teams.get(team_id)
            if team is None:
                raise NotFound(f"no team {team_id!r}")
            if problem_id in team.pieces_awarded_for:
                raise AlreadyAwarded(
                    f"{team_id} already holds the piece for {problem_id!r}"
                )
            judged_correct = any(
                s.team_id == team_id and s.problem_id == problem_id
                and s.verdict is Verdict.CORRECT
                for s in self.state.submissions.values()
            )
            if not judged_correct:
                raise NotCorrect(
                    f"no Correct-judged submission by {team_id} for {problem_id!r}"
                )
            self._commit("PieceAwarded", {
                "team_id": team_id, "problem_id": problem_id,
            })
            return team

    def attempt_round2_entry(self, actor: Actor,
                             passcode_guess: str) -> tuple[EntryResult, int]:
        with self._lock:
            team = self._team_for(actor)
            self._require_phase(Phase.ROUND1)
            if team.admitted:
                return (EntryResult.ADMITTED, team.entry_attempts_used)
            config = self.state.config
            if team.entry_attempts_used >= config.max_entry_attempts:
                return (EntryResult.LOCKED_OUT, team.entry_attempts_used)
            complete = team.puzzle_pieces >= config.puzzle_piece_count
            if complete and passcode_guess == config.passcode:
                self._commit("EntryAttempt", {
                    "team_id": team.id,
                    "result": EntryResult.ADMITTED.value,
                    "attempts_used": team.entry_attempts_used,
                    "admitted": True,
                })
                return (EntryResult.ADMITTED, team.entry_attempts_used)
            attempts = team.entry_attempts_used + 1
            result = (EntryResult.LOCKED_OUT
                      if attempts >= config.max_entry_attempts
                      else EntryResult.REJECTED)
            self._commit("EntryAttempt", {
                "team_id": team.id,
                "result": result.value,
                "attempts_used": attempts,
                "admitted": False,
            })
            return (result, attempts)

    # -- AI queries --

    def handle_query(self, actor: Actor, mode: QueryMode, text: str) -> QueryRecord:
        with self._lock:
            team = self._team_for(actor)
            self._require_phase(Phase.ROUND2)
            if not team.admitted:
                raise NotAdmitted("team never passed the Round-2 entry gate")
            return self._run_query(team, mode, text, round_tag="R2")

    def _run_query(self, team: Team, mode: QueryMode, text: str,
                   round_tag: str) -> QueryRecord:
        if not text or not text.strip():
            raise EmptyQuery("query text is empty")
        config = self.state.config
        kind = aiproxy.classify_query(mode, text)
        if self.provider is None and kind is not aiproxy.QueryKind.SIMPLE_ARITHMETIC:
            raise ProviderUnavailable("no provider configured")
        outcome = aiproxy.produce_answer(
            mode, kind, text, self.provider, self.rng,
            strategy_flaw_probability=config.strategy_flaw_probability,
            glitch_probability=config.glitch_probability,
        )
        query_id = f"q-{len(self.state.queries) + 1}"
        record = QueryRecord(
            id=query_id,
            team_id=team.id,
            round=round_tag,
            mode=mode,
            kind=kind,
            prompt=text,
            ground_truth=outcome.ground_truth,
            emitted_answer=outcome.emitted,
            falsified=outcome.falsified,
            flaw_kind=outcome.flaw_kind,
            flaw_note=outcome.flaw_note,
            rng_draw=outcome.rng_draw,
            timestamp_ms=self._now_ms(),
        )
        self._commit("QueryHandled", {"query": record.to_payload()})
        return self.state.queries[query_id]

    # -- deception claims --

    def file_claim(self, actor: Actor, query_id: str,
                   explanation: str) -> DeceptionClaim:
        with self._lock:
            team = self._team_for(actor)
            if self.state.phase not in CLAIM_PHASES:
                raise WrongPhase(
                    f"claims are closed in phase {self.state.phase.value}"
                )
            query = self.state.queries.get(query_id)
            if query is None:
                raise NotFound(f"no query {query_id!r}")
            if query.team_id != team.id:
                raise ForeignQuery("only the asking team may claim deception")
            for claim in list(self.state.claims.values()) + list(
                    self._pending_claims.values()):
                if (claim.team_id == team.id and claim.query_id == query_id
                        and claim.verdict is not ClaimVerdict.REJECTED):
                    raise AlreadyAdjudicated(
                        f"a claim for {query_id} is already on file"
                    )
            self._claim_counter += 1
            claim = DeceptionClaim(
                id=f"claim-{self._claim_counter}",
                team_id=team.id,
                query_id=query_id,
                explanation=explanation,
                verdict=ClaimVerdict.PENDING,
                filed_ms=self._now_ms(),
            )
            self._pending_claims[claim.id] = claim
            return claim

    def adjudicate_claim(self, actor: Actor, claim_id: str) -> DeceptionClaim:
        with self._lock:
            self._require(actor, Role.JUDGE, Role.ADMIN)
            if claim_id in self.state.claims:
                raise AlreadyAdjudicated(f"{claim_id} already has a verdict")
            claim = self._pending_claims.get(claim_id)
            if claim is None:
                raise NotFound(f"no pending claim {claim_id!r}")
            query = self.state.queries[claim.query_id]
            verdict = aiproxy.adjudicate(query)
            self._commit("ClaimAdjudicated", {"claim": {
                "id": claim.id,
                "team_id": claim.team_id,
                "query_id": claim.query_id,
                "explanation": claim.explanation,
                "verdict": verdict.value,
                "filed_ms": claim.filed_ms,
            }})
            del self._pending_claims[claim_id]
            if verdict is ClaimVerdict.UPHELD:
                self._emit_score(claim.team_id, Rule.DECEPTION_DETECTED,
                                 scoring.FIXED_DELTAS[Rule.DECEPTION_DETECTED],
                                 source_ref=claim.id)
            return self.state.claims[claim_id]

    # -- recon --

    def open_recon_window(self, actor: Actor = ADMIN) -> ReconWindow:
        with self._lock:
            self._require(actor, Role.ADMIN)
            self._require_phase(Phase.ROUND3_RECON)
            if self.state.window is not None:
                raise AlreadyOpened("the recon window was already opened")
            now = self._now_ms()
            self._commit("WindowOpened", {
                "opened_at_ms": now,
                "duration_s": self.state.config.recon_duration_s,
            })
            self._arm_window_timer()
            return self.state.window

    def _arm_window_timer(self) -> None:
        window = self.state.window
        if (window is None or window.state is not WindowState.OPEN
                or self.clock.simulated):
            return
        delay_s = max(0.0, (window.deadline_ms - self.clock.now_ms()) / 1000) + 0.005
        self._window_timer = threading.Timer(delay_s, self._close_window_if_due)
        self._window_timer.daemon = True
        self._window_timer.start()

    def _close_window_if_due(self) -> None:
        with self._lock:
            window = self.state.window
            if (window is not None and window.state is WindowState.OPEN
                    and self._now_ms() > window.deadline_ms):
                self._commit("WindowClosed", {"closed_at_ms": self._now_ms()})

    def submit_recon_query(self, actor: Actor,
                           text: str) -> tuple[ReconEntry, QueryRecord]:
        with self._lock:
            team = self._team_for(actor)
            self._require_phase(Phase.ROUND3_RECON)
            if not team.admitted:
                raise NotAdmitted("team never passed the Round-2 entry gate")
            window = self.state.window
            if window is None:
                raise WrongPhase("the recon window has not opened")
            now = self._now_ms()
            if window.state is WindowState.OPEN and now > window.deadline_ms:
                self._commit("WindowClosed", {"closed_at_ms": now})
            if not self.state.window.accepts_at(now):
                raise WindowClosed("the recon window is closed")
            record = self._run_query(team, self.state.config.recon_mode,
                                     text, round_tag="R3")
            entry_id = f"re-{len(self.state.recon_entries) + 1}"
            self._commit("ReconQuery", {"entry": {
                "id": entry_id,
                "team_id": team.id,
                "prompt": text,
                "query_id": record.id,
                "timestamp_ms": record.timestamp_ms,
            }})
            return (self.state.recon_entries[-1], record)

    # -- round 3 judging --

    def record_presentation(self, actor: Actor, team_id: str,
                            points) -> ScoreEvent:
        with self._lock:
            self._require(actor, Role.JUDGE, Role.ADMIN)
            self._require_phase(Phase.ROUND3_PRESENTATION)
            team = self.state.teams.get(team_id)
            if team is None:
                raise NotFound(f"no team {team_id!r}")
            if not team.active:
                raise Forbidden("team is not active")
            tenths = tenths_from_points(points)
            if not 0 <= tenths <= 1000:
                raise OutOfRange("presentation score must lie in [0, 100]")
            if team.presentation_tenths is not None:
                raise AlreadyJudged(f"{team_id} already has a presentation score")
            return self._emit_score(team_id, Rule.ROUND3_PRESENTATION, tenths,
                                    source_ref=f"presentation:{team_id}")

    # -- clock control (simulated tournaments only) --

    def advance_clock(self, actor: Actor, delta_ms: int) -> int:
        with self._lock:
            self._require(actor, Role.ADMIN)
            if not self.clock.simulated:
                raise BadRequest("this tournament runs on a real clock")
            now = self.clock.advance(delta_ms)
            window = self.state.window
            if (window is not None and window.state is WindowState.OPEN
                    and now > window.deadline_ms):
                self._commit("WindowClosed", {"closed_at_ms": self._now_ms()})
            return now

    # -- reads --

    def scoreboard_snapshot(self) -> dict:
        with self._lock:
            state = self.state
            rows = scoring.scoreboard_rows(state.teams, state.score_events)
            weight = state.config.weight
            out_rows = []
            for row in rows:
                team = state.teams[row.team_id]
                entry = {
                    "team_id": row.team_id,
                    "team_name": team.name,
                    "total_tenths": row.total_tenths,
                    "total": points_str(row.total_tenths),
                    "rules": {r.value: row.rule_tenths[r] for r in Rule},
                    "round3_weighted": None,
                }
                if team.presentation_tenths is not None:
                    solution_tenths = self._round3_solution_tenths(row.team_id)
                    normalized = scoring.normalize_solution_points(
                        solution_tenths,
                        state.config.round3_max_solution_points,
                    )
                    weighted = scoring.round3_total(
                        normalized, Fraction(team.presentation_tenths, 10),
                        weight,
                    )
                    entry["round3_weighted"] = _fraction_str(weighted)
                out_rows.append(entry)
            return {
                "tournament_id": state.id,
                "phase": state.phase.value,
                "rows": out_rows,
            }

    def _round3_solution_tenths(self, team_id: str) -> int:
        total = 0
        for event in self.state.score_events:
            if event.team_id != team_id:
                continue
            if event.rule not in (Rule.CORRECT_SOLUTION, Rule.PARTIAL_SOLUTION):
                continue
            submission = self.state.submissions.get(event.source_ref)
            if submission is not None and submission.round == "R3":
                total += event.delta_tenths
        return total

    def scoreboard_csv(self) -> str:
        with self._lock:
            return scoring.scoreboard_csv(
                scoring.scoreboard_rows(self.state.teams, self.state.score_events)
            )

    def ledger_records(self, *, team_id: str | None = None,
                       include_truth: bool = False) -> list[dict]:
        """Export view of the query ledger.

        include_truth is the judge/admin variant; the team variant filters
        to the team's own records and strips all truth metadata.
        """
        with self._lock:
            out = []
            for query in self.state.queries.values():
                if team_id is not None and query.team_id != team_id:
                    continue
                out.append(query.to_payload() if include_truth
                           else query.team_view())
            return out

    def feed_snapshot(self, from_sequence: int = 0) -> list[FeedEvent]:
        with self._lock:
            if from_sequence < 0:
                raise OutOfRange("from_sequence must be >= 0")
            return list(self.state.feed[from_sequence:])

    def transcript(self, team_id: str, from_sequence: int = 0) -> list[PrivateMessage]:
        with self._lock:
            return list(self.state.private.get(team_id, [])[from_sequence:])

    def subscribe(self, *, team_id: str | None = None, feed_from: int = 0,
                  private_from: int = 0, max_queue: int = 1024) -> Subscription:
        with self._lock:
            self._sub_counter += 1
            sub = Subscription(
                id=self._sub_counter,
                team_id=team_id,
                queue=queue_module.Queue(maxsize=max_queue),
            )
            # backlog first, in stream order; live items follow behind
            for event in self.state.feed[feed_from:]:
                self._push(sub, ("feed", event))
            if team_id is not None:
                for msg in self.state.private.get(team_id, [])[private_from:]:
                    self._push(sub, ("private", msg))
            self._subscribers[sub.id] = sub
            return sub

    def unsubscribe(self, sub_id: int) -> None:
        with self._lock:
            self._subscribers.pop(sub_id, None)

    def now_ms(self) -> int:
        with self._lock:
            return self._now_ms()

    def pending_claims(self, team_id: str | None = None) -> list[DeceptionClaim]:
        with self._lock:
            return [c for c in self._pending_claims.values()
                    if team_id is None or c.team_id == team_id]

    def close(self) -> None:
        with self._lock:
            if self._window_timer is not None:
                self._window_timer.cancel()
            self.journal.close()


def _fraction_str(value: Fraction) -> str:
    from .mathexpr import format_rational

    return format_rational(value)
