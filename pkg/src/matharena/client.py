"""Thin HTTP client for the tournament API.

Used by the bundled bots and the command line; also a reference for what
any external client (e.g. a browser console) needs to implement.  Errors
come back as ApiError carrying the server's status and error code.
"""

from __future__ import annotations

import json
import socket
from typing import Any, Iterator
from urllib import error as urlerror
from urllib import request as urlrequest

from .aiproxy import QueryMode


class ApiError(Exception):
    def __init__(self, status: int, code: str, message: str):
        super().__init__(f"[{status} {code}] {message}")
        self.status = status
        self.code = code
        self.message = message


class ChannelClosed(Exception):
    """The NDJSON stream ended (server shutdown or subscriber overflow)."""


class ArenaClient:
    def __init__(self, base_url: str, token: str | None = None,
                 timeout_s: float = 10.0):
        self.base_url = base_url.rstrip("/")
        self.token = token
        self.timeout_s = timeout_s

    def with_token(self, token: str | None) -> "ArenaClient":
        return ArenaClient(self.base_url, token, self.timeout_s)

    # -- plumbing --

    def request(self, method: str, path: str,
                body: dict | None = None) -> Any:
        data = None if body is None else json.dumps(body).encode("utf-8")
        req = urlrequest.Request(self.base_url + path, data=data,
                                 method=method)
        req.add_header("Accept", "application/json")
        if data is not None:
            req.add_header("Content-Type", "application/json")
        if self.token:
            req.add_header("Authorization", f"Bearer {self.token}")
        try:
            with urlrequest.urlopen(req, timeout=self.timeout_s) as resp:
                return self._parse(resp)
        except urlerror.HTTPError as exc:
            raise self._api_error(exc) from None
        except (urlerror.URLError, socket.timeout) as exc:
            raise ApiError(0, "unreachable", str(exc)) from None

    @staticmethod
    def _parse(resp) -> Any:
        raw = resp.read()
        content_type = resp.headers.get("Content-Type", "")
        if content_type.startswith("application/json"):
            return json.loads(raw)
        return raw.decode("utf-8")

    @staticmethod
    def _api_error(exc: urlerror.HTTPError) -> ApiError:
        try:
            payload = json.loads(exc.read())
            err = payload["error"]
            return ApiError(exc.code, err["code"], err["message"])
        except Exception:
            return ApiError(exc.code, "http_error", str(exc))

    def get(self, path: str) -> Any:
        return self.request("GET", path)

    def post(self, path: str, body: dict | None = None) -> Any:
        return self.request("POST", path, body or {})

    # -- tournament shortcuts (paths under /v1) --

    def create_tournament(self, config: dict | None = None,
                          tournament_id: str | None = None) -> dict:
        body: dict = {"config": config or {}}
        if tournament_id is not None:
            body["tournament_id"] = tournament_id
        return self.post("/v1/tournaments", body)

    def mint_token(self, tid: str, role: str,
                   team_id: str | None = None, label: str = "") -> dict:
        body: dict = {"role": role, "label": label}
        if team_id is not None:
            body["team_id"] = team_id
        return self.post(f"/v1/tournaments/{tid}/tokens", body)

    def register_team(self, tid: str, name: str) -> dict:
        return self.post(f"/v1/tournaments/{tid}/teams", {"name": name})

    def advance(self, tid: str) -> dict:
        return self.post(f"/v1/tournaments/{tid}/advance")

    def advance_clock(self, tid: str, delta_ms: int) -> dict:
        return self.post(f"/v1/tournaments/{tid}/clock",
                         {"delta_ms": delta_ms})

    def state(self, tid: str) -> dict:
        return self.get(f"/v1/tournaments/{tid}")

    def submit_solution(self, tid: str, problem_id: str, payload: str,
                        cited_hints: list[str] | None = None) -> dict:
        return self.post(f"/v1/tournaments/{tid}/submissions", {
            "problem_id": problem_id,
            "payload": payload,
            "cited_hints": cited_hints or [],
        })

    def judge(self, tid: str, submission_id: str, verdict: str,
              hint_marks: dict[str, str] | None = None) -> dict:
        return self.post(
            f"/v1/tournaments/{tid}/submissions/{submission_id}/verdict",
            {"verdict": verdict, "hint_marks": hint_marks or {}})

    def award_piece(self, tid: str, team_id: str, problem_id: str) -> dict:
        return self.post(f"/v1/tournaments/{tid}/pieces",
                         {"team_id": team_id, "problem_id": problem_id})

    def attempt_entry(self, tid: str, passcode: str) -> dict:
        return self.post(f"/v1/tournaments/{tid}/entry",
                         {"passcode": passcode})

    def ask(self, tid: str, mode: QueryMode | str, text: str) -> dict:
        mode_value = mode.value if isinstance(mode, QueryMode) else mode
        return self.post(f"/v1/tournaments/{tid}/queries",
                         {"mode": mode_value, "text": text})

    def file_claim(self, tid: str, query_id: str, explanation: str) -> dict:
        return self.post(f"/v1/tournaments/{tid}/claims",
                         {"query_id": query_id, "explanation": explanation})

    def adjudicate(self, tid: str, claim_id: str) -> dict:
        return self.post(
            f"/v1/tournaments/{tid}/claims/{claim_id}/adjudicate")

    def open_recon(self, tid: str) -> dict:
        return self.post(f"/v1/tournaments/{tid}/recon/open")

    def recon_query(self, tid: str, text: str) -> dict:
        return self.post(f"/v1/tournaments/{tid}/recon/queries",
                         {"text": text})

    def record_presentation(self, tid: str, team_id: str, points) -> dict:
        return self.post(f"/v1/tournaments/{tid}/presentation",
                         {"team_id": team_id, "points": points})

    def scoreboard(self, tid: str) -> dict:
        return self.get(f"/v1/tournaments/{tid}/scoreboard")

    def scoreboard_csv(self, tid: str) -> str:
        return self.get(f"/v1/tournaments/{tid}/scoreboard.csv")

    def feed(self, tid: str, start: int = 0) -> dict:
        return self.get(f"/v1/tournaments/{tid}/feed?from={start}")

    def transcript(self, tid: str, start: int = 0) -> dict:
        return self.get(f"/v1/tournaments/{tid}/transcript?from={start}")

    def queries(self, tid: str) -> dict:
        return self.get(f"/v1/tournaments/{tid}/queries")

    def claims(self, tid: str) -> dict:
        return self.get(f"/v1/tournaments/{tid}/claims")

    def journal_text(self, tid: str) -> str:
        return self.get(f"/v1/tournaments/{tid}/journal")

    # -- the live channel --

    def channel(self, tid: str, from_sequence: int = 0,
                private_from: int = 0,
                timeout_s: float | None = None) -> Iterator[dict]:
        """Yield channel frames until the stream ends.

        The generator owns the connection; closing it (or breaking out of
        the loop) drops the stream.  Reconnect with the last sequence
        numbers you processed to resume.
        """
        url = (f"{self.base_url}/v1/tournaments/{tid}/channel"
               f"?from_sequence={from_sequence}&private_from={private_from}")
        req = urlrequest.Request(url)
        if self.token:
            req.add_header("Authorization", f"Bearer {self.token}")
        resp = urlrequest.urlopen(
            req, timeout=self.timeout_s if timeout_s is None else timeout_s)
        try:
            while True:
                line = resp.readline()
                if not line:
                    raise ChannelClosed("stream ended")
                line = line.strip()
                if not line:
                    continue
                frame = json.loads(line)
                if frame.get("type") == "overflow":
                    raise ChannelClosed("dropped as a slow consumer")
                yield frame
        finally:
            resp.close()
