"""Shared helpers for engine-level and end-to-end tests."""

from __future__ import annotations

import queue as queue_module

from matharena.engine import (
    Actor,
    EntryResult,
    Match,
    Role,
    Tournament,
    TournamentConfig,
)
from matharena.llmclient import CannedClient
from matharena.scoring import HintMark, Verdict

JUDGE = Actor(Role.JUDGE, label="judge-1")
SPECTATOR = Actor(Role.SPECTATOR, label="viewer")

PASSCODE = "314159"


def make_config(**overrides) -> TournamentConfig:
    base = dict(
        simulated_clock=True,
        rng_seed=42,
        puzzle_piece_count=2,
        quota_min_queries=3,
        recon_duration_s=900,
    )
    base.update(overrides)
    return TournamentConfig(**base)


def make_match(**overrides) -> Match:
    return Match.create(make_config(**overrides), tournament_id="t-test",
                        provider=CannedClient())


def team_actor(team) -> Actor:
    return Actor(Role.TEAM, team_id=team.id, label=team.name)


def admit(match: Match, actor: Actor, problems=("p1", "p2")) -> None:
    """Earn every piece and pass the entry gate during Round 1."""
    team = match.state.teams[actor.team_id]
    for problem_id in problems:
        submission = match.submit_solution(actor, problem_id, "a full proof")
        match.judge_solution(JUDGE, submission.id, Verdict.CORRECT, {})
        match.award_puzzle_piece(JUDGE, team.id, problem_id)
    result, _ = match.attempt_round2_entry(actor, PASSCODE)
    assert result is EntryResult.ADMITTED


def fingerprint(state: Tournament) -> dict:
    """Order-stable digest of everything observable about a tournament."""
    return {
        "id": state.id,
        "config": state.config.to_payload(),
        "phase": state.phase.value,
        "clock_ms": state.clock_ms,
        "applied": state.applied,
        "teams": {
            tid: {
                "name": t.name,
                "puzzle_pieces": t.puzzle_pieces,
                "pieces_for": sorted(t.pieces_awarded_for),
                "entry_attempts_used": t.entry_attempts_used,
                "round2_query_count": t.round2_query_count,
                "active": t.active,
                "admitted": t.admitted,
                "presentation_tenths": t.presentation_tenths,
            }
            for tid, t in state.teams.items()
        },
        "submissions": {sid: s.view() for sid, s in state.submissions.items()},
        "queries": {qid: q.to_payload() for qid, q in state.queries.items()},
        "claims": {cid: c.to_payload() for cid, c in state.claims.items()},
        "events": [
            (e.id, e.team_id, e.rule.value, e.delta_tenths, e.source_ref,
             e.timestamp_ms)
            for e in state.score_events
        ],
        "totals": dict(state.totals_tenths),
        "window": None if state.window is None else (
            state.window.opened_at_ms, state.window.duration_s,
            state.window.state.value, state.window.closed_at_ms,
        ),
        "recon_entries": [e.to_payload() for e in state.recon_entries],
        "feed": [f.to_payload() for f in state.feed],
        "private": {
            tid: [m.to_payload() for m in msgs]
            for tid, msgs in state.private.items()
        },
    }


def drain(subscription) -> list:
    items = []
    while True:
        try:
            items.append(subscription.queue.get_nowait())
        except queue_module.Empty:
            return items


__all__ = [
    "JUDGE", "SPECTATOR", "PASSCODE", "make_config", "make_match",
    "team_actor", "admit", "fingerprint", "drain", "HintMark", "Verdict",
]
