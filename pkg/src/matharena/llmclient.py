"""Text-completion provider abstraction with record/replay cassettes.

Live traffic goes through HttpProviderClient (endpoint and credentials come
from environment variables, never from journaled state).  Tests and
simulations use CassetteClient, which replays canned responses keyed by a
digest of the normalized prompt and never fabricates an answer: an unknown
prompt raises CassetteMiss.

Cassette file format (docs/protocol.md): UTF-8 lines of canonical JSON.
The first line is a header {"format": "provider-cassette", "version": 1};
each following line holds {"digest", "prompt", "response"}.  The digest is
sha256 over the normalized prompt; a stored prompt that disagrees with its
digest fails loading.  Duplicate digests are legal and the last one wins.
"""

from __future__ import annotations

import hashlib
import json
import os
import re
import socket
import urllib.error
import urllib.request
from dataclasses import dataclass

CASSETTE_FORMAT = "provider-cassette"
CASSETTE_VERSION = 1

ENV_URL = "MATHARENA_PROVIDER_URL"
ENV_KEY = "MATHARENA_PROVIDER_KEY"


class ProviderError(Exception):
    """Transport or contract failure talking to a live provider."""


class ProviderTimeout(ProviderError):
    pass


class CassetteMiss(ProviderError):
    def __init__(self, digest: str, prompt: str):
        preview = prompt if len(prompt) <= 80 else prompt[:77] + "..."
        super().__init__(f"no cassette entry {digest[:12]} for prompt {preview!r}")
        self.digest = digest


class CassetteError(Exception):
    """Malformed cassette file."""


@dataclass(frozen=True)
class ProviderRequest:
    prompt: str
    max_length: int = 512
    temperature: float = 0.0
    timeout_s: float = 30.0


def normalize_prompt(text: str) -> str:
    """Trim and collapse runs of whitespace; the digest input."""
    return re.sub(r"\s+", " ", text.strip())


def prompt_digest(text: str) -> str:
    return hashlib.sha256(normalize_prompt(text).encode("utf-8")).hexdigest()


class ProviderClient:
    def complete(self, request: ProviderRequest) -> str:
        raise NotImplementedError


class CassetteClient(ProviderClient):
    """Replays recorded responses; read-only and safe to share across threads."""

    def __init__(self, entries: dict[str, str]):
        self._entries = dict(entries)

    @classmethod
    def from_file(cls, path: str) -> "CassetteClient":
        return cls(load_cassette(path))

    def complete(self, request: ProviderRequest) -> str:
        digest = prompt_digest(request.prompt)
        try:
            return self._entries[digest]
        except KeyError:
            raise CassetteMiss(digest, request.prompt) from None


class CannedClient(ProviderClient):
    """Deterministic offline stand-in for a real model.

    Synthesizes a stylized multi-step answer from the prompt alone (seeded
    by its digest), so simulations and demos run with no network and produce
    byte-identical transcripts.  The closing sentence always carries a
    numeric value so downstream answer-extraction has something to find.
    """

    _OPENERS = (
        "Start by restating what is asked",
        "Begin with the simplest nontrivial case",
        "Rewrite the statement in a workable form",
        "Separate the given data from the goal",
    )
    _MIDDLES = (
        "Then apply the standard estimate to each part.",
        "Then compare both sides term by term.",
        "Then reduce the problem to a known identity.",
        "Then eliminate the variable with the fewest constraints.",
    )

    def complete(self, request: ProviderRequest) -> str:
        digest = prompt_digest(request.prompt)
        pick = int(digest[:8], 16)
        value = int(digest[8:16], 16) % 199 - 99
        opener = self._OPENERS[pick % len(self._OPENERS)]
        middle = self._MIDDLES[(pick // 7) % len(self._MIDDLES)]
        return (f"{opener}. {middle} "
                f"Combining the parts, the final value is {value}.")


class RecordingClient(ProviderClient):
    """Wraps a live client and captures (prompt, response) pairs."""

    def __init__(self, inner: ProviderClient):
        self._inner = inner
        self.entries: dict[str, tuple[str, str]] = {}  # digest -> (prompt, response)

    def complete(self, request: ProviderRequest) -> str:
        response = self._inner.complete(request)
        normalized = normalize_prompt(request.prompt)
        self.entries[prompt_digest(request.prompt)] = (normalized, response)
        return response

    def save(self, path: str) -> None:
        save_cassette(path, self.entries)


class HttpProviderClient(ProviderClient):
    """Reference adapter speaking the JSON contract in docs/protocol.md.

    POST {"prompt", "max_length", "temperature"} -> 200 {"text": "..."}.
    """

    def __init__(self, url: str, api_key: str | None = None):
        self._url = url
        self._api_key = api_key

    @classmethod
    def from_env(cls) -> "HttpProviderClient":
        url = os.environ.get(ENV_URL)
        if not url:
            raise ProviderError(f"{ENV_URL} is not set")
        return cls(url, os.environ.get(ENV_KEY))

    def complete(self, request: ProviderRequest) -> str:
        body = json.dumps({
            "prompt": request.prompt,
            "max_length": request.max_length,
            "temperature": request.temperature,
        }).encode("utf-8")
        headers = {"Content-Type": "application/json"}
        if self._api_key:
            headers["Authorization"] = f"Bearer {self._api_key}"
        req = urllib.request.Request(self._url, data=body, headers=headers)
        try:
            with urllib.request.urlopen(req, timeout=request.timeout_s) as resp:
                payload = json.loads(resp.read().decode("utf-8"))
        except socket.timeout as exc:
            raise ProviderTimeout(str(exc)) from exc
        except urllib.error.HTTPError as exc:
            raise ProviderError(f"provider returned status {exc.code}") from exc
        except urllib.error.URLError as exc:
            if isinstance(exc.reason, socket.timeout):
                raise ProviderTimeout(str(exc.reason)) from exc
            raise ProviderError(str(exc.reason)) from exc
        except (json.JSONDecodeError, UnicodeDecodeError) as exc:
            raise ProviderError(f"undecodable provider response: {exc}") from exc
        text = payload.get("text") if isinstance(payload, dict) else None
        if not isinstance(text, str):
            raise ProviderError("provider response lacks a 'text' field")
        return text


# --- cassette files ---

def save_cassette(path: str, entries: dict[str, tuple[str, str]]) -> None:
    """entries maps digest -> (normalized prompt, response)."""
    with open(path, "w", encoding="utf-8") as fh:
        header = {"format": CASSETTE_FORMAT, "version": CASSETTE_VERSION}
        fh.write(json.dumps(header, sort_keys=True) + "\n")
        for digest, (prompt, response) in entries.items():
            line = {"digest": digest, "prompt": prompt, "response": response}
            fh.write(json.dumps(line, sort_keys=True, ensure_ascii=False) + "\n")


def cassette_entries(pairs: dict[str, str]) -> dict[str, tuple[str, str]]:
    """Build save_cassette input from {prompt: response}."""
    return {
        prompt_digest(prompt): (normalize_prompt(prompt), response)
        for prompt, response in pairs.items()
    }


def load_cassette(path: str) -> dict[str, str]:
    entries: dict[str, str] = {}
    with open(path, encoding="utf-8") as fh:
        header_line = fh.readline()
        try:
            header = json.loads(header_line)
        except json.JSONDecodeError as exc:
            raise CassetteError(f"bad cassette header: {exc}") from exc
        if not isinstance(header, dict) or header.get("format") != CASSETTE_FORMAT:
            raise CassetteError("not a provider cassette")
        if header.get("version") != CASSETTE_VERSION:
            raise CassetteError(f"unsupported cassette version {header.get('version')}")
        for lineno, line in enumerate(fh, start=2):
            if not line.strip():
                continue
            try:
                row = json.loads(line)
            except json.JSONDecodeError as exc:
                raise CassetteError(f"line {lineno}: {exc}") from exc
            digest = row.get("digest")
            response = row.get("response")
            if not isinstance(digest, str) or not isinstance(response, str):
                raise CassetteError(f"line {lineno}: missing digest/response")
            prompt = row.get("prompt")
            if isinstance(prompt, str) and prompt_digest(prompt) != digest:
                raise CassetteError(f"line {lineno}: prompt does not match digest")
            entries[digest] = response  # duplicates: last one wins
    return entries
