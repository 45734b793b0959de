"""Dual-mode AI proxy: classification, fault injection, truth ledger.

The proxy sits between teams and the text provider and deliberately corrupts
certain answer classes at configured probabilities, while recording exact
ground truth for every exchange:

    Advisor mode
        FactLookup       passed through unmodified (always truthful)
        StrategyRequest  plan corrupted with probability strategy_flaw_probability
    Calculator mode
        SimpleArithmetic evaluated exactly in-process (provider bypassed)
        MultiStepCalculation
                         provider answer's final value glitched with
                         probability glitch_probability
    Other                passed through unmodified

Calculator answers are normalized to the final numeric value in canonical
rational form, so the ledger comparison emitted != ground_truth is literal
string inequality.  A record is falsified if and only if a flaw was applied
if and only if the emitted answer differs from ground truth.  Nothing in any
team-visible payload ever includes the falsified flag, the flaw kind, or
ground truth; the judge export is the only surface that shows them.
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from enum import Enum
from fractions import Fraction
from random import Random

from . import mathexpr
from .errors import ProviderUnavailable
from .llmclient import ProviderClient, ProviderError, ProviderRequest

# operator-count threshold separating SimpleArithmetic from MultiStepCalculation
N_SIMPLE = 4


class QueryMode(str, Enum):
    ADVISOR = "Advisor"
    CALCULATOR = "Calculator"


class QueryKind(str, Enum):
    FACT_LOOKUP = "FactLookup"
    STRATEGY_REQUEST = "StrategyRequest"
    SIMPLE_ARITHMETIC = "SimpleArithmetic"
    MULTI_STEP = "MultiStepCalculation"
    OTHER = "Other"


class FlawKind(str, Enum):
    SIGN_FLIP = "SignFlip"
    FACTOR_ERROR = "FactorError"
    DIGIT_PERTURBATION = "DigitPerturbation"
    FLAWED_PLAN = "FlawedPlan"


class ClaimVerdict(str, Enum):
    PENDING = "Pending"
    UPHELD = "Upheld"
    REJECTED = "Rejected"


_MODE_KINDS = {
    QueryMode.ADVISOR: frozenset(
        {QueryKind.FACT_LOOKUP, QueryKind.STRATEGY_REQUEST, QueryKind.OTHER}
    ),
    QueryMode.CALCULATOR: frozenset(
        {QueryKind.SIMPLE_ARITHMETIC, QueryKind.MULTI_STEP, QueryKind.OTHER}
    ),
}


@dataclass(frozen=True)
class QueryRecord:
    id: str
    team_id: str
    round: str  # "R2" or "R3"
    mode: QueryMode
    kind: QueryKind
    prompt: str
    ground_truth: str | None
    emitted_answer: str
    falsified: bool
    flaw_kind: FlawKind | None
    flaw_note: str | None
    rng_draw: float | None
    timestamp_ms: int

    def to_payload(self) -> dict:
        return {
            "id": self.id,
            "team_id": self.team_id,
            "round": self.round,
            "mode": self.mode.value,
            "kind": self.kind.value,
            "prompt": self.prompt,
            "ground_truth": self.ground_truth,
            "emitted_answer": self.emitted_answer,
            "falsified": self.falsified,
            "flaw_kind": self.flaw_kind.value if self.flaw_kind else None,
            "flaw_note": self.flaw_note,
            "rng_draw": self.rng_draw,
            "timestamp_ms": self.timestamp_ms,
        }

    @classmethod
    def from_payload(cls, payload: dict) -> "QueryRecord":
        return cls(
            id=payload["id"],
            team_id=payload["team_id"],
            round=payload["round"],
            mode=QueryMode(payload["mode"]),
            kind=QueryKind(payload["kind"]),
            prompt=payload["prompt"],
            ground_truth=payload["ground_truth"],
            emitted_answer=payload["emitted_answer"],
            falsified=payload["falsified"],
            flaw_kind=FlawKind(payload["flaw_kind"]) if payload["flaw_kind"] else None,
            flaw_note=payload["flaw_note"],
            rng_draw=payload["rng_draw"],
            timestamp_ms=payload["timestamp_ms"],
        )

    def team_view(self) -> dict:
        """What the asking team may see; no truth metadata."""
        return {
            "id": self.id,
            "round": self.round,
            "mode": self.mode.value,
            "kind": self.kind.value,
            "prompt": self.prompt,
            "answer": self.emitted_answer,
            "timestamp_ms": self.timestamp_ms,
        }


def record_is_sound(record: QueryRecord) -> bool:
    """The ledger invariant, checkable on any record."""
    if record.falsified != (record.flaw_kind is not None):
        return False
    if record.kind not in _MODE_KINDS[record.mode]:
        return False
    if record.ground_truth is not None:
        return record.falsified == (record.emitted_answer != record.ground_truth)
    return not record.falsified


@dataclass(frozen=True)
class DeceptionClaim:
    id: str
    team_id: str
    query_id: str
    explanation: str
    verdict: ClaimVerdict
    filed_ms: int

    def to_payload(self) -> dict:
        return {
            "id": self.id,
            "team_id": self.team_id,
            "query_id": self.query_id,
            "explanation": self.explanation,
            "verdict": self.verdict.value,
            "filed_ms": self.filed_ms,
        }

    @classmethod
    def from_payload(cls, payload: dict) -> "DeceptionClaim":
        return cls(
            id=payload["id"],
            team_id=payload["team_id"],
            query_id=payload["query_id"],
            explanation=payload["explanation"],
            verdict=ClaimVerdict(payload["verdict"]),
            filed_ms=payload["filed_ms"],
        )


def adjudicate(record: QueryRecord) -> ClaimVerdict:
    """Mechanical verdict straight from the ledger."""
    return ClaimVerdict.UPHELD if record.falsified else ClaimVerdict.REJECTED


# --- classification ---

_CALCULUS = re.compile(r"\b(limit|integral|derivative|series)\b", re.IGNORECASE)
_FACT = re.compile(
    r"\b(what is|state|define|formula for|theorem)\b", re.IGNORECASE
)
_PLAN = re.compile(
    r"\b(how do i solve|strategy|plan|approach|steps to)\b", re.IGNORECASE
)


def classify_query(mode: QueryMode, text: str) -> QueryKind:
    """Deterministic rule list; first match wins.

    1. Calculator text that parses as an arithmetic expression is
       SimpleArithmetic up to N_SIMPLE operators, MultiStepCalculation above.
    2. Calculator text naming a calculus construct is MultiStepCalculation.
    3. Advisor text matching a definition/statement pattern is FactLookup.
    4. Advisor text matching a planning pattern is StrategyRequest.
    5. Everything else is Other.
    """
    if mode is QueryMode.CALCULATOR:
        try:
            tree = mathexpr.parse(text)
        except mathexpr.MathExprError:
            pass
        else:
            if mathexpr.operator_count(tree) <= N_SIMPLE:
                return QueryKind.SIMPLE_ARITHMETIC
            return QueryKind.MULTI_STEP
        if _CALCULUS.search(text):
            return QueryKind.MULTI_STEP
    if mode is QueryMode.ADVISOR:
        if _FACT.search(text):
            return QueryKind.FACT_LOOKUP
        if _PLAN.search(text):
            return QueryKind.STRATEGY_REQUEST
    return QueryKind.OTHER


# --- value perturbation ---

def _digit_places(text: str) -> list[tuple[str, int]]:
    """(side, power-of-ten place) for every digit of a canonical value.

    side is "num"/"den" for p/q forms, "dec" for decimal forms.
    """
    places: list[tuple[str, int]] = []
    if "/" in text:
        num, den = text.lstrip("-").split("/")
        for i in range(len(num)):
            places.append(("num", len(num) - 1 - i))
        for i in range(len(den)):
            places.append(("den", len(den) - 1 - i))
        return places
    body = text.lstrip("-")
    dot = body.find(".")
    for i, ch in enumerate(body):
        if ch == ".":
            continue
        if dot == -1:
            places.append(("dec", len(body) - 1 - i))
        elif i < dot:
            places.append(("dec", dot - 1 - i))
        else:
            places.append(("dec", dot - i))
    return places


def perturb_value(value: Fraction, rng: Random) -> tuple[Fraction, FlawKind]:
    """Produce a plausible-but-wrong neighbor of an exact value.

    SignFlip negates; FactorError multiplies by one of {1/2, 2, 10};
    DigitPerturbation shifts the value by one unit in a digit place of its
    canonical form.  Zero degrades through the chain down to +/-1.  The
    result always differs from the input.
    """
    kind = (FlawKind.SIGN_FLIP, FlawKind.FACTOR_ERROR,
            FlawKind.DIGIT_PERTURBATION)[rng.randrange(3)]
    if kind is FlawKind.SIGN_FLIP:
        if value != 0:
            return (-value, FlawKind.SIGN_FLIP)
        kind = FlawKind.FACTOR_ERROR
    if kind is FlawKind.FACTOR_ERROR:
        if value != 0:
            factor = rng.choice((Fraction(1, 2), Fraction(2), Fraction(10)))
            return (value * factor, FlawKind.FACTOR_ERROR)
        kind = FlawKind.DIGIT_PERTURBATION
    if value == 0:
        return (Fraction(rng.choice((1, -1))), FlawKind.DIGIT_PERTURBATION)

    canonical = mathexpr.format_rational(value)
    places = _digit_places(canonical)
    for _ in range(32):
        side, place = places[rng.randrange(len(places))]
        delta = rng.choice((1, -1))
        if side == "dec":
            return (value + delta * Fraction(10) ** place,
                    FlawKind.DIGIT_PERTURBATION)
        if side == "num":
            new_num = value.numerator + delta * 10 ** place
            return (Fraction(new_num, value.denominator),
                    FlawKind.DIGIT_PERTURBATION)
        new_den = value.denominator + delta * 10 ** place
        if new_den > 0:
            return (Fraction(value.numerator, new_den),
                    FlawKind.DIGIT_PERTURBATION)
        # denominator would hit zero or flip sign; redraw
    return (value + 1, FlawKind.DIGIT_PERTURBATION)  # unreachable in practice


# --- plan corruption ---

# near-miss concept pairs; also the source of false lemmas
CONFUSION_TABLE: tuple[tuple[str, str], ...] = (
    ("necessary", "sufficient"),
    ("sufficient", "necessary"),
    ("maximum", "minimum"),
    ("minimum", "maximum"),
    ("at least", "at most"),
    ("at most", "at least"),
    ("increasing", "decreasing"),
    ("decreasing", "increasing"),
    ("upper bound", "lower bound"),
    ("lower bound", "upper bound"),
    ("union", "intersection"),
    ("intersection", "union"),
    ("the theorem", "the converse of the theorem"),
)

FALSE_LEMMAS: tuple[str, ...] = (
    "First note that any necessary condition here is also sufficient, so "
    "verifying one direction settles both.",
    "Recall that the converse of a proven statement holds automatically, "
    "which we use without further checking.",
    "Since the expression is bounded, it must attain its maximum at an "
    "endpoint, so only endpoints need checking.",
    "Because both sides are positive, the inequality direction is preserved "
    "under any rearrangement.",
)


def _split_units(text: str) -> tuple[list[str], str]:
    """Sentence/step units plus the joiner that reassembles them."""
    if "\n" in text:
        units = [line for line in text.split("\n") if line.strip()]
        if len(units) > 1:
            return units, "\n"
    units = [u for u in re.split(r"(?<=[.!?])\s+", text.strip()) if u]
    return units, " "


def inject_flawed_plan(plan: str, rng: Random) -> tuple[str, str]:
    """Apply one templated corruption; returns (flawed_text, note).

    Candidate corruptions: delete one step, swap two adjacent steps, or
    substitute a near-miss concept from the confusion table.  Plans too
    short to corrupt (and degenerate swaps of identical steps) fall back to
    prepending a false lemma.  The output always differs from the input and
    the note describes exactly what was done.
    """
    units, joiner = _split_units(plan)
    lowered = plan.lower()
    substitutions = [
        (a, b) for a, b in CONFUSION_TABLE
        if re.search(rf"\b{re.escape(a)}\b", lowered)
    ]
    candidates: list[str] = []
    if len(units) >= 2:
        candidates += ["delete", "swap"]
    if substitutions:
        candidates.append("substitute")

    def prepend_lemma() -> tuple[str, str]:
        lemma = FALSE_LEMMAS[rng.randrange(len(FALSE_LEMMAS))]
        return (lemma + joiner + plan, "prepended a false lemma")

    if not candidates:
        return prepend_lemma()
    choice = candidates[rng.randrange(len(candidates))]
    if choice == "delete":
        index = rng.randrange(len(units))
        kept = units[:index] + units[index + 1:]
        return (joiner.join(kept), f"deleted step {index + 1} of {len(units)}")
    if choice == "swap":
        index = rng.randrange(len(units) - 1)
        swapped = list(units)
        swapped[index], swapped[index + 1] = swapped[index + 1], swapped[index]
        result = joiner.join(swapped)
        if result == plan:  # adjacent steps were identical
            return prepend_lemma()
        return (result, f"swapped steps {index + 1} and {index + 2}")
    term, replacement = substitutions[rng.randrange(len(substitutions))]
    pattern = re.compile(rf"\b{re.escape(term)}\b", re.IGNORECASE)
    result = pattern.sub(replacement, plan, count=1)
    if result == plan:  # defensive; search above said it matches
        return prepend_lemma()
    return (result, f"replaced '{term}' with '{replacement}'")


# --- final-value extraction (MultiStepCalculation ground truth) ---

_VALUE = re.compile(r"-?\d+(?:\.\d+)?(?:\s*/\s*\d+)?")


def extract_final_value(text: str) -> Fraction | None:
    """Last numeric token in a provider answer, as an exact rational."""
    matches = _VALUE.findall(text)
    for candidate in reversed(matches):
        try:
            return mathexpr.parse_rational(candidate.replace(" ", ""))
        except (ValueError, ZeroDivisionError):
            continue
    return None


# --- answer production ---

@dataclass(frozen=True)
class AnswerOutcome:
    ground_truth: str | None
    emitted: str
    falsified: bool
    flaw_kind: FlawKind | None
    flaw_note: str | None
    rng_draw: float | None


def _truthful(text: str, draw: float | None = None) -> AnswerOutcome:
    return AnswerOutcome(text, text, False, None, None, draw)


def produce_answer(mode: QueryMode, kind: QueryKind, prompt: str,
                   provider: ProviderClient, rng: Random,
                   strategy_flaw_probability: float,
                   glitch_probability: float) -> AnswerOutcome:
    """Run one query through the proxy pipeline.

    Consumes rng only for the falsification coin and any flaw-shaping draws;
    provider failures surface as ProviderUnavailable before anything is
    recorded.
    """
    if kind is QueryKind.SIMPLE_ARITHMETIC:
        try:
            value = mathexpr.evaluate(mathexpr.parse(prompt))
        except mathexpr.MathExprError as exc:
            return _truthful(f"undefined ({exc})")
        return _truthful(mathexpr.format_rational(value))

    try:
        text = provider.complete(ProviderRequest(prompt=prompt))
    except ProviderError as exc:
        raise ProviderUnavailable(str(exc)) from exc

    if kind is QueryKind.STRATEGY_REQUEST:
        draw = rng.random()
        if draw < strategy_flaw_probability:
            flawed, note = inject_flawed_plan(text, rng)
            return AnswerOutcome(text, flawed, True, FlawKind.FLAWED_PLAN,
                                 note, draw)
        return _truthful(text, draw)

    if kind is QueryKind.MULTI_STEP:
        value = extract_final_value(text)
        if value is None:
            return _truthful(text)
        truth = mathexpr.format_rational(value)
        draw = rng.random()
        if draw < glitch_probability:
            perturbed, flaw = perturb_value(value, rng)
            return AnswerOutcome(truth, mathexpr.format_rational(perturbed),
                                 True, flaw, f"true value {truth}", draw)
        return _truthful(truth, draw)

    # FactLookup and Other pass through unmodified
    return _truthful(text)
