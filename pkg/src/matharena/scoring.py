"""Scoring rules and the scoreboard fold.

All point arithmetic runs on integer tenths of a point, so totals are exact
and order-independent; floats only appear at the formatting edge.  The rule
schedule:

    CorrectSolution     +5.0
    PartialSolution     +2.0
    DeceptionDetected   +2.0
    FalseHintUsed       -1.0
    CorrectHintUse      +0.5
    QuotaPenalty        -(per_missing x shortfall), never positive
    Round3Presentation  judge rubric value, never negative

The weighted Round-3 total is a derived display quantity, not a scoreboard
sum: raw totals stay equal to the plain sum of every emitted event.
"""

from __future__ import annotations

import csv
import io
from dataclasses import dataclass
from enum import Enum
from fractions import Fraction
from typing import Iterable, Union

from .errors import OutOfRange


class Rule(str, Enum):
    CORRECT_SOLUTION = "CorrectSolution"
    PARTIAL_SOLUTION = "PartialSolution"
    DECEPTION_DETECTED = "DeceptionDetected"
    FALSE_HINT_USED = "FalseHintUsed"
    CORRECT_HINT_USE = "CorrectHintUse"
    QUOTA_PENALTY = "QuotaPenalty"
    ROUND3_PRESENTATION = "Round3Presentation"


class Verdict(str, Enum):
    PENDING = "Pending"
    CORRECT = "Correct"
    PARTIAL = "Partial"
    INCORRECT = "Incorrect"


class HintMark(str, Enum):
    USED_CORRECTLY = "UsedCorrectly"
    MISLED = "Misled"
    NEUTRAL = "Neutral"


# fixed-delta rules, in tenths
FIXED_DELTAS = {
    Rule.CORRECT_SOLUTION: 50,
    Rule.PARTIAL_SOLUTION: 20,
    Rule.DECEPTION_DETECTED: 20,
    Rule.FALSE_HINT_USED: -10,
    Rule.CORRECT_HINT_USE: 5,
}

Number = Union[int, float, str, Fraction]


def exact_fraction(value: Number) -> Fraction:
    """Interpret a config/api number exactly.

    Floats go through their shortest decimal repr, so 0.30 means 3/10 and
    never the binary neighbor.
    """
    if isinstance(value, Fraction):
        return value
    if isinstance(value, int):
        return Fraction(value)
    return Fraction(str(value))


def tenths_from_points(value: Number) -> int:
    scaled = exact_fraction(value) * 10
    if scaled.denominator != 1:
        raise OutOfRange(f"{value!r} is not a multiple of 0.1 points")
    return int(scaled)


def points_str(tenths: int) -> str:
    """Exact decimal rendering: 45 -> "4.5", -25 -> "-2.5", 50 -> "5"."""
    sign = "-" if tenths < 0 else ""
    whole, frac = divmod(abs(tenths), 10)
    return f"{sign}{whole}" if frac == 0 else f"{sign}{whole}.{frac}"


@dataclass(frozen=True)
class ScoreEvent:
    id: str
    team_id: str
    rule: Rule
    delta_tenths: int
    source_ref: str  # submission/claim/phase id the points trace back to
    timestamp_ms: int


def solution_delta(verdict: Verdict) -> int | None:
    """Tenths awarded for a verdict; None means no event is emitted."""
    if verdict is Verdict.CORRECT:
        return FIXED_DELTAS[Rule.CORRECT_SOLUTION]
    if verdict is Verdict.PARTIAL:
        return FIXED_DELTAS[Rule.PARTIAL_SOLUTION]
    return None


def hint_delta(mark: HintMark, falsified: bool) -> tuple[Rule, int] | None:
    """Rule and tenths for one judged hint citation, or None.

    A hint used correctly earns its half point even when the underlying
    answer was falsified (the team extracted a kernel of truth).  Being
    misled only costs a point when the ledger says the answer really was
    falsified.
    """
    if mark is HintMark.USED_CORRECTLY:
        return (Rule.CORRECT_HINT_USE, FIXED_DELTAS[Rule.CORRECT_HINT_USE])
    if mark is HintMark.MISLED and falsified:
        return (Rule.FALSE_HINT_USED, FIXED_DELTAS[Rule.FALSE_HINT_USED])
    return None


def quota_delta(query_count: int, quota_min: int,
                penalty_per_missing_tenths: int) -> int:
    """Tenths for the Round-2 quota check; zero when the quota was met."""
    if query_count >= quota_min:
        return 0
    return -penalty_per_missing_tenths * (quota_min - query_count)


def round3_total(solution: Number, interaction: Number,
                 weight: Number) -> Fraction:
    """Weighted Round-3 total: (1 - weight) * solution + weight * interaction.

    Inputs are on the [0, 100] scale; weight is in [0, 1].  Exact.
    """
    s, i, w = (exact_fraction(v) for v in (solution, interaction, weight))
    if not (0 <= s <= 100 and 0 <= i <= 100):
        raise OutOfRange("scores must lie in [0, 100]")
    if not (0 <= w <= 1):
        raise OutOfRange("weight must lie in [0, 1]")
    return (1 - w) * s + w * i


def normalize_solution_points(raw_tenths: int, max_points: Number) -> Fraction:
    """Linear map of raw solution points onto [0, 100], clamped."""
    cap = exact_fraction(max_points)
    if cap <= 0:
        raise OutOfRange("maximum attainable points must be positive")
    scaled = Fraction(raw_tenths, 10) / cap * 100
    return max(Fraction(0), min(Fraction(100), scaled))


# --- scoreboard ---

@dataclass(frozen=True)
class ScoreboardRow:
    team_id: str
    total_tenths: int
    rule_tenths: dict[Rule, int]


def scoreboard_rows(team_ids: Iterable[str],
                    events: Iterable[ScoreEvent]) -> list[ScoreboardRow]:
    """Fold events into per-team totals.

    The fold is a plain sum, so event order never matters.  Row order
    follows team_ids (registration order); teams without events still get
    a row.
    """
    totals: dict[str, int] = {t: 0 for t in team_ids}
    per_rule: dict[str, dict[Rule, int]] = {
        t: {r: 0 for r in Rule} for t in totals
    }
    for event in events:
        totals[event.team_id] += event.delta_tenths
        per_rule[event.team_id][event.rule] += event.delta_tenths
    return [
        ScoreboardRow(team, totals[team], per_rule[team]) for team in totals
    ]


CSV_COLUMNS = ["team", "total"] + [r.value for r in Rule]


def scoreboard_csv(rows: Iterable[ScoreboardRow]) -> str:
    """UTF-8 CSV with a header row; per-rule columns sum to the total."""
    out = io.StringIO()
    writer = csv.writer(out, lineterminator="\n")
    writer.writerow(CSV_COLUMNS)
    for row in rows:
        writer.writerow(
            [row.team_id, points_str(row.total_tenths)]
            + [points_str(row.rule_tenths[r]) for r in Rule]
        )
    return out.getvalue()
