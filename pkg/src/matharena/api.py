"""HTTP surface for tournaments.

Stdlib-only server (ThreadingHTTPServer) exposing the engine under /v1.
Authentication is bearer-token based: the server mints an admin token at
startup, and the admin mints judge/team tokens per tournament.  Requests
without a token act as spectators, who see only public data.

The live channel is a chunked NDJSON stream (GET .../channel): a hello
frame, then the requested backlog, then live frames as they happen.
Delivery is at-least-once; clients deduplicate by sequence number and
reconnect with from_sequence/private_from to resume.  Slow consumers are
disconnected rather than ever stalling the engine.
"""

from __future__ import annotations

import json
import logging
import queue as queue_module
import secrets
import threading
import time
from http.server import BaseHTTPRequestHandler, ThreadingHTTPServer
from urllib.parse import parse_qs, urlsplit

from .aiproxy import QueryMode
from .engine import (
    Actor,
    Match,
    Role,
    TournamentConfig,
)
from .errors import (
    ArenaError,
    BadRequest,
    Forbidden,
    NotFound,
    Unauthorized,
)
from .journal import Journal, journal_lines
from .llmclient import ProviderClient
from .scoring import HintMark, Verdict, points_str

log = logging.getLogger("matharena.api")

CHANNEL_PING_S = 15.0


class ArenaServer:
    """Registry of live matches behind one HTTP listener."""

    def __init__(self, host: str = "127.0.0.1", port: int = 0, *,
                 provider: ProviderClient | None = None,
                 journal_dir: str | None = None,
                 admin_token: str | None = None):
        self.provider = provider
        self.journal_dir = journal_dir
        self.admin_token = admin_token or secrets.token_urlsafe(24)
        self.matches: dict[str, Match] = {}
        self.tokens: dict[str, Actor] = {
            self.admin_token: Actor(Role.ADMIN, label="admin"),
        }
        self.shutting_down = threading.Event()
        self._lock = threading.Lock()
        self._httpd = _HttpServer((host, port), _Handler)
        self._httpd.arena = self
        self._thread: threading.Thread | None = None

    # -- lifecycle --

    @property
    def address(self) -> tuple[str, int]:
        host, port = self._httpd.server_address[:2]
        return (host, port)

    @property
    def base_url(self) -> str:
        host, port = self.address
        return f"http://{host}:{port}"

    def start(self) -> "ArenaServer":
        self._thread = threading.Thread(target=self._httpd.serve_forever,
                                        name="arena-http", daemon=True)
        self._thread.start()
        return self

    def serve_forever(self) -> None:
        self._httpd.serve_forever()

    def stop(self) -> None:
        self.shutting_down.set()
        self._httpd.shutdown()
        self._httpd.server_close()
        if self._thread is not None:
            self._thread.join(timeout=5)
        with self._lock:
            for match in self.matches.values():
                match.close()

    # -- tournament registry --

    def create_tournament(self, config: TournamentConfig,
                          tournament_id: str | None = None) -> Match:
        with self._lock:
            if tournament_id is not None and tournament_id in self.matches:
                raise BadRequest(f"tournament {tournament_id!r} exists")
            journal = None
            if self.journal_dir is not None:
                tournament_id = tournament_id or "t-" + secrets.token_hex(6)
                journal = Journal(f"{self.journal_dir}/{tournament_id}.journal")
            match = Match.create(config, tournament_id=tournament_id,
                                 journal=journal, provider=self.provider)
            self.matches[match.state.id] = match
            return match

    def adopt(self, match: Match) -> None:
        """Register an externally constructed match (resume, tests)."""
        with self._lock:
            self.matches[match.state.id] = match

    def match_for(self, tournament_id: str) -> Match:
        with self._lock:
            match = self.matches.get(tournament_id)
        if match is None:
            raise NotFound(f"no tournament {tournament_id!r}")
        return match

    # -- tokens --

    def mint_token(self, role: Role, team_id: str | None = None,
                   label: str = "") -> str:
        token = secrets.token_urlsafe(18)
        with self._lock:
            self.tokens[token] = Actor(role, team_id=team_id,
                                       label=label or role.value)
        return token

    def actor_for(self, token: str | None) -> Actor:
        if token is None:
            return Actor(Role.SPECTATOR, label="spectator")
        with self._lock:
            actor = self.tokens.get(token)
        if actor is None:
            raise Unauthorized("unknown token")
        return actor


class _HttpServer(ThreadingHTTPServer):
    daemon_threads = True
    block_on_close = False
    arena: ArenaServer


class _Handler(BaseHTTPRequestHandler):
    protocol_version = "HTTP/1.1"
    server: _HttpServer
    _raw_body = b""

    # -- plumbing --

    def log_message(self, fmt, *args):  # quiet by default
        log.debug("%s %s", self.address_string(), fmt % args)

    def _send_json(self, status: int, payload: dict | list) -> None:
        body = json.dumps(payload, ensure_ascii=False).encode("utf-8")
        self.send_response(status)
        self._cors()
        self.send_header("Content-Type", "application/json; charset=utf-8")
        self.send_header("Content-Length", str(len(body)))
        self.end_headers()
        self.wfile.write(body)

    def _send_text(self, status: int, text: str, content_type: str) -> None:
        body = text.encode("utf-8")
        self.send_response(status)
        self._cors()
        self.send_header("Content-Type", f"{content_type}; charset=utf-8")
        self.send_header("Content-Length", str(len(body)))
        self.end_headers()
        self.wfile.write(body)

    def _send_error(self, exc: ArenaError) -> None:
        self._send_json(exc.http_status, {
            "error": {"code": exc.code, "message": str(exc)},
        })

    def _cors(self) -> None:
        self.send_header("Access-Control-Allow-Origin", "*")
        self.send_header("Access-Control-Allow-Headers",
                         "Authorization, Content-Type")
        self.send_header("Access-Control-Allow-Methods",
                         "GET, POST, OPTIONS")

    def _body(self) -> dict:
        if not self._raw_body:
            return {}
        try:
            data = json.loads(self._raw_body)
        except json.JSONDecodeError as exc:
            raise BadRequest(f"request body is not valid JSON: {exc}")
        if not isinstance(data, dict):
            raise BadRequest("request body must be a JSON object")
        return data

    def _actor(self) -> Actor:
        header = self.headers.get("Authorization")
        if header is None:
            return self.server.arena.actor_for(None)
        scheme, _, token = header.partition(" ")
        if scheme.lower() != "bearer" or not token:
            raise Unauthorized("expected 'Authorization: Bearer <token>'")
        return self.server.arena.actor_for(token.strip())

    # -- entry points --

    def do_OPTIONS(self):
        self.send_response(204)
        self._cors()
        self.send_header("Content-Length", "0")
        self.end_headers()

    def do_GET(self):
        self._dispatch("GET")

    def do_POST(self):
        self._dispatch("POST")

    def _dispatch(self, method: str) -> None:
        try:
            # Drain the request body up front, whether or not the matched
            # handler wants it: an unread body would desynchronize the
            # connection for keep-alive clients, corrupting their next
            # request line.
            length = int(self.headers.get("Content-Length") or 0)
            self._raw_body = self.rfile.read(length) if length else b""
            url = urlsplit(self.path)
            segments = [s for s in url.path.split("/") if s]
            query = {k: v[-1] for k, v in parse_qs(url.query).items()}
            if not segments or segments[0] != "v1":
                raise NotFound(f"no route {url.path!r}")
            self._route(method, segments[1:], query)
        except ArenaError as exc:
            try:
                self._send_error(exc)
            except (BrokenPipeError, ConnectionResetError):
                pass
        except (BrokenPipeError, ConnectionResetError):
            pass
        except Exception:
            log.exception("unhandled error serving %s %s", method, self.path)
            try:
                self._send_error(ArenaError("internal error"))
            except (BrokenPipeError, ConnectionResetError):
                pass

    # -- routing --

    def _route(self, method: str, seg: list[str], query: dict) -> None:
        arena = self.server.arena
        if seg == ["tournaments"]:
            if method == "POST":
                return self._create_tournament()
            return self._list_tournaments()
        if len(seg) >= 2 and seg[0] == "tournaments":
            match = arena.match_for(seg[1])
            rest = seg[2:]
            if method == "POST" and len(rest) == 3:
                if rest[0] == "submissions" and rest[2] == "verdict":
                    return self._verdict(match, rest, query)
                if rest[0] == "claims" and rest[2] == "adjudicate":
                    return self._adjudicate(match, rest, query)
            if method == "POST" and len(rest) == 2 and rest[0] == "recon":
                return self._recon(match, rest, query)
            handler = _ROUTES.get((method, tuple(rest)))
            if handler is None:
                raise NotFound(f"no route {self.path!r}")
            return handler(self, match, rest, query)
        raise NotFound(f"no route {self.path!r}")

    # -- tournament collection --

    def _create_tournament(self) -> None:
        actor = self._actor()
        if actor.role is not Role.ADMIN:
            raise Forbidden("only the admin creates tournaments")
        body = self._body()
        config_data = body.get("config", {})
        if not isinstance(config_data, dict):
            raise BadRequest("config must be an object")
        config = TournamentConfig.from_dict(config_data)
        match = self.server.arena.create_tournament(
            config, tournament_id=body.get("tournament_id"))
        self._send_json(201, {
            "tournament_id": match.state.id,
            "phase": match.state.phase.value,
            "config": match.state.config.to_payload(),
        })

    def _list_tournaments(self) -> None:
        self._actor()  # validate the token if one was sent
        arena = self.server.arena
        with arena._lock:
            matches = list(arena.matches.values())
        self._send_json(200, {"tournaments": [
            {"tournament_id": m.state.id, "phase": m.state.phase.value}
            for m in matches
        ]})

    # -- per-tournament handlers --

    def _state(self, match: Match, rest, query) -> None:
        actor = self._actor()
        self._send_json(200, state_snapshot(match, actor))

    def _tokens(self, match: Match, rest, query) -> None:
        actor = self._actor()
        if actor.role is not Role.ADMIN:
            raise Forbidden("only the admin mints tokens")
        body = self._body()
        try:
            role = Role(body.get("role", ""))
        except ValueError:
            raise BadRequest("role must be one of admin/judge/team/spectator")
        team_id = body.get("team_id")
        if role is Role.TEAM:
            if not team_id or team_id not in match.state.teams:
                raise NotFound(f"no team {team_id!r}")
        elif team_id is not None:
            raise BadRequest("team_id only applies to team tokens")
        token = self.server.arena.mint_token(
            role, team_id=team_id, label=str(body.get("label", "")))
        self._send_json(201, {"token": token, "role": role.value,
                              "team_id": team_id})

    def _teams(self, match: Match, rest, query) -> None:
        actor = self._actor()
        team = match.register_team(str(self._body().get("name", "")), actor)
        self._send_json(201, team.public_view())

    def _advance(self, match: Match, rest, query) -> None:
        actor = self._actor()
        phase = match.advance_phase(actor)
        self._send_json(200, {"phase": phase.value})

    def _clock(self, match: Match, rest, query) -> None:
        actor = self._actor()
        if self.command == "GET":
            return self._send_json(200, {"clock_ms": match.now_ms()})
        body = self._body()
        delta = body.get("delta_ms")
        if not isinstance(delta, int):
            raise BadRequest("delta_ms must be an integer")
        now = match.advance_clock(actor, delta)
        self._send_json(200, {"clock_ms": now})

    def _pieces(self, match: Match, rest, query) -> None:
        actor = self._actor()
        body = self._body()
        team = match.award_puzzle_piece(actor, str(body.get("team_id", "")),
                                        str(body.get("problem_id", "")))
        self._send_json(200, team.public_view())

    def _entry(self, match: Match, rest, query) -> None:
        actor = self._actor()
        body = self._body()
        passcode = body.get("passcode")
        if not isinstance(passcode, str):
            raise BadRequest("passcode must be a string")
        result, attempts = match.attempt_round2_entry(actor, passcode)
        team = match.state.teams[actor.team_id]
        self._send_json(200, {
            "result": result.value,
            "attempts_used": attempts,
            "admitted": team.admitted,
        })

    def _submissions(self, match: Match, rest, query) -> None:
        actor = self._actor()
        if self.command == "GET":
            with match._lock:
                if actor.role in (Role.JUDGE, Role.ADMIN):
                    subs = list(match.state.submissions.values())
                elif actor.role is Role.TEAM:
                    subs = [s for s in match.state.submissions.values()
                            if s.team_id == actor.team_id]
                else:
                    raise Forbidden("spectators may not read submissions")
                return self._send_json(200,
                                       {"submissions": [s.view() for s in subs]})
        body = self._body()
        cited = body.get("cited_hints", [])
        if not isinstance(cited, list) or any(not isinstance(c, str)
                                              for c in cited):
            raise BadRequest("cited_hints must be a list of query ids")
        submission = match.submit_solution(
            actor, str(body.get("problem_id", "")),
            str(body.get("payload", "")), cited)
        self._send_json(201, submission.view())

    def _verdict(self, match: Match, rest, query) -> None:
        actor = self._actor()
        body = self._body()
        try:
            verdict = Verdict(body.get("verdict", ""))
        except ValueError:
            raise BadRequest("verdict must be Correct/Partial/Incorrect")
        marks_data = body.get("hint_marks", {})
        if not isinstance(marks_data, dict):
            raise BadRequest("hint_marks must be an object")
        try:
            marks = {k: HintMark(v) for k, v in marks_data.items()}
        except ValueError:
            raise BadRequest("hint marks must be UsedCorrectly/Misled/Neutral")
        submission = match.judge_solution(actor, rest[1], verdict, marks)
        self._send_json(200, submission.view())

    def _queries(self, match: Match, rest, query) -> None:
        actor = self._actor()
        if self.command == "GET":
            if actor.role in (Role.JUDGE, Role.ADMIN):
                records = match.ledger_records(include_truth=True)
            elif actor.role is Role.TEAM:
                records = match.ledger_records(team_id=actor.team_id)
            else:
                raise Forbidden("spectators may not read the query ledger")
            return self._send_json(200, {"queries": records})
        body = self._body()
        try:
            mode = QueryMode(body.get("mode", ""))
        except ValueError:
            raise BadRequest("mode must be Advisor or Calculator")
        record = match.handle_query(actor, mode, str(body.get("text", "")))
        self._send_json(201, record.team_view())

    def _claims(self, match: Match, rest, query) -> None:
        actor = self._actor()
        if self.command == "GET":
            if actor.role in (Role.JUDGE, Role.ADMIN):
                team_filter = None
            elif actor.role is Role.TEAM:
                team_filter = actor.team_id
            else:
                raise Forbidden("spectators may not read claims")
            with match._lock:
                adjudicated = [c.to_payload()
                               for c in match.state.claims.values()
                               if team_filter in (None, c.team_id)]
            pending = [c.to_payload()
                       for c in match.pending_claims(team_filter)]
            return self._send_json(200, {"claims": adjudicated + pending})
        body = self._body()
        claim = match.file_claim(actor, str(body.get("query_id", "")),
                                 str(body.get("explanation", "")))
        self._send_json(201, claim.to_payload())

    def _adjudicate(self, match: Match, rest, query) -> None:
        actor = self._actor()
        claim = match.adjudicate_claim(actor, rest[1])
        self._send_json(200, claim.to_payload())

    def _recon(self, match: Match, rest, query) -> None:
        actor = self._actor()
        if rest[1:] == ["open"]:
            window = match.open_recon_window(actor)
            return self._send_json(200, {
                "opened_at_ms": window.opened_at_ms,
                "duration_s": window.duration_s,
                "deadline_ms": window.deadline_ms,
            })
        if rest[1:] == ["queries"]:
            body = self._body()
            entry, record = match.submit_recon_query(
                actor, str(body.get("text", "")))
            return self._send_json(201, {
                "entry": entry.to_payload(),
                "message": record.team_view(),
            })
        raise NotFound(f"no route {self.path!r}")

    def _presentation(self, match: Match, rest, query) -> None:
        actor = self._actor()
        body = self._body()
        points = body.get("points")
        if not isinstance(points, (int, float, str)):
            raise BadRequest("points must be a number")
        event = match.record_presentation(actor, str(body.get("team_id", "")),
                                          points)
        self._send_json(200, {
            "team_id": event.team_id,
            "delta_tenths": event.delta_tenths,
            "points": points_str(event.delta_tenths),
        })

    def _scoreboard(self, match: Match, rest, query) -> None:
        self._actor()
        self._send_json(200, match.scoreboard_snapshot())

    def _scoreboard_csv(self, match: Match, rest, query) -> None:
        self._actor()
        self._send_text(200, match.scoreboard_csv(), "text/csv")

    def _feed(self, match: Match, rest, query) -> None:
        self._actor()
        start = _int_param(query, "from", 0)
        events = match.feed_snapshot(start)
        self._send_json(200, {
            "events": [e.to_payload() for e in events],
            "next": start + len(events),
        })

    def _transcript(self, match: Match, rest, query) -> None:
        actor = self._actor()
        if actor.role is not Role.TEAM:
            raise Forbidden("only a team token has a transcript")
        start = _int_param(query, "from", 0)
        messages = match.transcript(actor.team_id, start)
        self._send_json(200, {
            "messages": [m.to_payload() for m in messages],
            "next": start + len(messages),
        })

    def _journal(self, match: Match, rest, query) -> None:
        actor = self._actor()
        if actor.role is not Role.ADMIN:
            raise Forbidden("only the admin exports the journal")
        with match._lock:
            text = "\n".join(journal_lines(match.journal.records)) + "\n"
        self._send_text(200, text, "application/x-ndjson")

    # -- the live channel --

    def _channel(self, match: Match, rest, query) -> None:
        actor = self._actor()
        feed_from = _int_param(query, "from_sequence", 0)
        private_from = _int_param(query, "private_from", 0)
        team_id = actor.team_id if actor.role is Role.TEAM else None

        sub = match.subscribe(team_id=team_id, feed_from=feed_from,
                              private_from=private_from)
        arena = self.server.arena
        try:
            self.send_response(200)
            self._cors()
            self.send_header("Content-Type", "application/x-ndjson")
            self.send_header("Cache-Control", "no-store")
            self.send_header("Transfer-Encoding", "chunked")
            self.end_headers()
            state = match.state
            self._chunk({
                "type": "hello",
                "tournament_id": state.id,
                "phase": state.phase.value,
                "role": actor.role.value,
                "team_id": team_id,
            })
            last_write = time.monotonic()
            while sub.alive and not arena.shutting_down.is_set():
                try:
                    kind, item = sub.queue.get(timeout=0.5)
                except queue_module.Empty:
                    if time.monotonic() - last_write >= CHANNEL_PING_S:
                        self._chunk({"type": "ping"})
                        last_write = time.monotonic()
                    continue
                if kind == "feed":
                    self._chunk({"type": "feed", "event": item.to_payload()})
                else:
                    self._chunk({"type": "private",
                                 "message": item.to_payload()})
                last_write = time.monotonic()
            if not sub.alive:
                self._chunk({"type": "overflow"})  # client should reconnect
            self.wfile.write(b"0\r\n\r\n")
        except (BrokenPipeError, ConnectionResetError):
            pass
        finally:
            match.unsubscribe(sub.id)
            self.close_connection = True

    def _chunk(self, frame: dict) -> None:
        data = (json.dumps(frame, ensure_ascii=False) + "\n").encode("utf-8")
        self.wfile.write(f"{len(data):x}\r\n".encode("ascii"))
        self.wfile.write(data)
        self.wfile.write(b"\r\n")
        self.wfile.flush()


def _int_param(query: dict, name: str, default: int) -> int:
    raw = query.get(name)
    if raw is None:
        return default
    try:
        value = int(raw)
    except ValueError:
        raise BadRequest(f"{name} must be an integer")
    if value < 0:
        raise BadRequest(f"{name} must be >= 0")
    return value


def state_snapshot(match: Match, actor: Actor) -> dict:
    """Role-filtered view of one tournament."""
    with match._lock:
        state = match.state
        config = state.config
        snapshot = {
            "tournament_id": state.id,
            "phase": state.phase.value,
            "clock_ms": match.now_ms(),
            "teams": [t.public_view() for t in state.teams.values()],
            "window": None if state.window is None else {
                "opened_at_ms": state.window.opened_at_ms,
                "duration_s": state.window.duration_s,
                "deadline_ms": state.window.deadline_ms,
                "state": state.window.state.value,
                "closed_at_ms": state.window.closed_at_ms,
            },
            "feed_next": len(state.feed),
            "rules": {
                "quota_min_queries": config.quota_min_queries,
                "quota_penalty_per_missing": points_str(config.penalty_tenths),
                "recon_duration_s": config.recon_duration_s,
                "ai_interaction_weight": str(config.ai_interaction_weight),
                "puzzle_piece_count": config.puzzle_piece_count,
                "max_entry_attempts": config.max_entry_attempts,
                "recon_mode": config.recon_mode.value,
                "round1_counts_toward_total": config.round1_counts_toward_total,
                "round3_max_solution_points":
                    str(config.round3_max_solution_points),
                "simulated_clock": config.simulated_clock,
            },
        }
        if actor.role is Role.TEAM and actor.team_id in state.teams:
            team = state.teams[actor.team_id]
            snapshot["you"] = team.own_view()
            snapshot["you"]["private_next"] = len(
                state.private.get(team.id, []))
        if actor.role in (Role.JUDGE, Role.ADMIN):
            snapshot["pending_judgements"] = [
                s.view() for s in state.submissions.values()
                if s.verdict.value == "Pending"
            ]
            snapshot["pending_claims"] = [
                c.to_payload() for c in match._pending_claims.values()
            ]
        if actor.role is Role.ADMIN:
            snapshot["config"] = config.to_payload()
        return snapshot


_ROUTES = {
    ("GET", ()): _Handler._state,
    ("POST", ("tokens",)): _Handler._tokens,
    ("POST", ("teams",)): _Handler._teams,
    ("POST", ("advance",)): _Handler._advance,
    ("GET", ("clock",)): _Handler._clock,
    ("POST", ("clock",)): _Handler._clock,
    ("POST", ("pieces",)): _Handler._pieces,
    ("POST", ("entry",)): _Handler._entry,
    ("GET", ("submissions",)): _Handler._submissions,
    ("POST", ("submissions",)): _Handler._submissions,
    ("GET", ("queries",)): _Handler._queries,
    ("POST", ("queries",)): _Handler._queries,
    ("GET", ("claims",)): _Handler._claims,
    ("POST", ("claims",)): _Handler._claims,
    ("POST", ("presentation",)): _Handler._presentation,
    ("GET", ("scoreboard",)): _Handler._scoreboard,
    ("GET", ("scoreboard.csv",)): _Handler._scoreboard_csv,
    ("GET", ("feed",)): _Handler._feed,
    ("GET", ("transcript",)): _Handler._transcript,
    ("GET", ("journal",)): _Handler._journal,
    ("GET", ("channel",)): _Handler._channel,
}
