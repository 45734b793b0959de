"""Error taxonomy shared across the engine, proxy, recon, and api.

Every class carries a stable machine-readable ``code`` and the HTTP status
the api maps it to.  The mapping is total by construction: the api resolves
the status from the exception class, so a new error class cannot ship
without one.  The table is documented in docs/protocol.md and a test walks
the subclass tree to keep the doc honest.
"""

from __future__ import annotations


class ArenaError(Exception):
    code = "internal_error"
    http_status = 500


# --- validation (400) ---

class InvalidConfig(ArenaError):
    code = "invalid_config"
    http_status = 400


class OutOfRange(ArenaError):
    code = "out_of_range"
    http_status = 400


class EmptyQuery(ArenaError):
    code = "empty_query"
    http_status = 400


class UnknownHintId(ArenaError):
    code = "unknown_hint_id"
    http_status = 400


class MarksMismatch(ArenaError):
    code = "marks_mismatch"
    http_status = 400


class BadRequest(ArenaError):
    code = "bad_request"
    http_status = 400


# --- auth (401 / 403) ---

class Unauthorized(ArenaError):
    """Missing or invalid token."""

    code = "unauthorized"
    http_status = 401


class Forbidden(ArenaError):
    """Authenticated, but the role may not perform this operation."""

    code = "forbidden"
    http_status = 403


class NotAdmitted(ArenaError):
    """Team lacks Round-2 admission."""

    code = "not_admitted"
    http_status = 403


class ForeignQuery(ArenaError):
    """Claim or citation references another team's query record."""

    code = "foreign_query"
    http_status = 403


# --- missing (404) ---

class NotFound(ArenaError):
    code = "not_found"
    http_status = 404


# --- state conflicts (409) ---

class WrongPhase(ArenaError):
    code = "wrong_phase"
    http_status = 409


class DuplicateName(ArenaError):
    code = "duplicate_name"
    http_status = 409


class NotCorrect(ArenaError):
    """Puzzle piece requested for a submission not judged Correct."""

    code = "not_correct"
    http_status = 409


class AlreadyAwarded(ArenaError):
    code = "already_awarded"
    http_status = 409


class AlreadyJudged(ArenaError):
    code = "already_judged"
    http_status = 409


class AlreadyAdjudicated(ArenaError):
    code = "already_adjudicated"
    http_status = 409


class AlreadyOpened(ArenaError):
    code = "already_opened"
    http_status = 409


class AlreadyFinished(ArenaError):
    code = "already_finished"
    http_status = 409


class WindowClosed(ArenaError):
    code = "window_closed"
    http_status = 409


# --- infrastructure (5xx) ---

class SequenceGap(ArenaError):
    code = "sequence_gap"
    http_status = 500


class CorruptRecord(ArenaError):
    code = "corrupt_record"
    http_status = 500


class ProviderUnavailable(ArenaError):
    code = "provider_unavailable"
    http_status = 503


def all_error_classes() -> list[type[ArenaError]]:
    out: list[type[ArenaError]] = []
    stack: list[type[ArenaError]] = [ArenaError]
    while stack:
        cls = stack.pop()
        out.append(cls)
        stack.extend(cls.__subclasses__())
    return sorted(out, key=lambda c: c.__name__)
