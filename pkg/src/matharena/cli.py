"""Command-line interface.

Subcommands:

* ``serve``    — run the HTTP server (optionally durable via --journal-dir,
  resuming any journals already there).
* ``simulate`` — play one complete scripted tournament in-process and
  print the outcome; deterministic in --seed.
* ``replay``   — rebuild a tournament from a journal file and report its
  state, verifying the answer-ledger soundness invariant.
* ``export``   — replay a journal and write the scoreboard (CSV/JSON) or
  the query ledger (JSON) without touching the journal file.
* ``eval``     — evaluate an arithmetic expression with the exact
  rational grammar used by the calculator.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from pathlib import Path
from random import Random

from .aiproxy import record_is_sound
from .bots import BotProfile, run_simulation
from .client import ApiError
from .engine import Match, SimulatedClock, replay_journal
from .errors import ArenaError, InvalidConfig
from .journal import Journal
from .llmclient import (CannedClient, CassetteClient, CassetteError,
                        HttpProviderClient, load_cassette)
from .mathexpr import MathExprError, evaluate_text, format_rational
from .scoring import points_str


def main(argv: list[str] | None = None) -> int:
    parser = _build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (ApiError, ArenaError, CassetteError, MathExprError,
            OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="matharena",
        description="Tournament server for human+AI math competitions "
                    "with a deliberately unreliable AI assistant.")
    sub = parser.add_subparsers(dest="command", required=True)

    serve = sub.add_parser("serve", help="run the HTTP server")
    serve.add_argument("--host", default="127.0.0.1")
    serve.add_argument("--port", type=int, default=8787)
    serve.add_argument("--journal-dir", metavar="DIR",
                       help="persist one journal per tournament here and "
                            "resume any found on startup")
    serve.add_argument("--admin-token", metavar="TOKEN",
                       default=os.environ.get("MATHARENA_ADMIN_TOKEN"),
                       help="admin bearer token (default: "
                            "$MATHARENA_ADMIN_TOKEN or freshly generated)")
    provider = serve.add_mutually_exclusive_group()
    provider.add_argument("--provider-url", metavar="URL",
                          help="live completion endpoint "
                               "(POST {prompt,...} -> {text})")
    provider.add_argument("--cassette", metavar="PATH",
                          help="serve recorded answers from a cassette file")
    serve.set_defaults(func=cmd_serve)

    simulate = sub.add_parser(
        "simulate", help="run one scripted tournament in-process")
    simulate.add_argument("--seed", type=int, default=0)
    simulate.add_argument("--profiles", default="trusting,skeptic",
                          help="comma-separated bot profiles: trusting, "
                               "skeptic, mixed[:p] (default: %(default)s)")
    simulate.add_argument("--set", dest="overrides", action="append",
                          default=[], metavar="KEY=VALUE",
                          help="override a tournament config field "
                               "(repeatable), e.g. --set quota_min_queries=6")
    simulate.add_argument("--journal", metavar="PATH",
                          help="write the finished journal here ('-' for "
                               "stdout)")
    simulate.add_argument("--json", action="store_true",
                          help="machine-readable result on stdout")
    simulate.set_defaults(func=cmd_simulate)

    replay = sub.add_parser(
        "replay", help="rebuild a tournament from a journal and verify it")
    replay.add_argument("journal", help="journal file path")
    replay.add_argument("--json", action="store_true")
    replay.set_defaults(func=cmd_replay)

    export = sub.add_parser(
        "export", help="derive reports from a journal file")
    export.add_argument("journal", help="journal file path")
    export.add_argument("--scoreboard-csv", metavar="PATH",
                        help="write the scoreboard as CSV ('-' for stdout)")
    export.add_argument("--scoreboard-json", metavar="PATH",
                        help="write the scoreboard snapshot as JSON")
    export.add_argument("--ledger", metavar="PATH",
                        help="write the query ledger as JSON")
    export.add_argument("--team", metavar="TEAM_ID",
                        help="restrict --ledger to one team's own view")
    export.add_argument("--include-truth", action="store_true",
                        help="include ground truth and flaw metadata in "
                             "--ledger (judge view)")
    export.set_defaults(func=cmd_export)

    evaluate = sub.add_parser(
        "eval", help="evaluate an arithmetic expression exactly")
    evaluate.add_argument("expression")
    evaluate.set_defaults(func=cmd_eval)
    return parser


# -- serve --

def cmd_serve(args) -> int:
    from .api import ArenaServer

    if args.provider_url:
        provider = HttpProviderClient(
            args.provider_url, api_key=os.environ.get("MATHARENA_PROVIDER_KEY"))
        provider_label = args.provider_url
    elif args.cassette:
        provider = CassetteClient(load_cassette(args.cassette))
        provider_label = f"cassette {args.cassette}"
    else:
        provider = CannedClient()
        provider_label = "canned (offline, deterministic)"

    server = ArenaServer(args.host, args.port, provider=provider,
                         journal_dir=args.journal_dir,
                         admin_token=args.admin_token)
    resumed = []
    if args.journal_dir:
        Path(args.journal_dir).mkdir(parents=True, exist_ok=True)
        for path in sorted(Path(args.journal_dir).glob("*.journal")):
            try:
                match = Match.resume(str(path), provider=provider)
            except ArenaError as exc:
                print(f"warning: skipping {path.name}: {exc}",
                      file=sys.stderr)
                continue
            server.adopt(match)
            resumed.append(match.state.id)

    server.start()
    print(f"listening on {server.base_url}")
    print(f"admin token: {server.admin_token}")
    print(f"provider: {provider_label}")
    for tournament_id in resumed:
        print(f"resumed tournament {tournament_id}")
    sys.stdout.flush()
    try:
        server.serve_forever()
    except KeyboardInterrupt:
        print("shutting down")
    finally:
        server.stop()
    return 0


# -- simulate --

def cmd_simulate(args) -> int:
    profiles = [BotProfile.parse(text, i)
                for i, text in enumerate(args.profiles.split(","))]
    overrides = {}
    for item in args.overrides:
        key, sep, raw = item.partition("=")
        if not sep:
            raise InvalidConfig(f"--set wants KEY=VALUE, got {item!r}")
        try:
            overrides[key] = json.loads(raw)
        except json.JSONDecodeError:
            overrides[key] = raw

    result = run_simulation(args.seed, profiles, config_overrides=overrides)

    if args.journal == "-":
        sys.stdout.write(result.journal_text)
    elif args.journal:
        Path(args.journal).write_text(result.journal_text, encoding="utf-8")

    upheld: dict[str, int] = {}
    for claim in result.claims:
        if claim["verdict"] == "Upheld":
            upheld[claim["team_id"]] = upheld.get(claim["team_id"], 0) + 1

    if args.json:
        print(json.dumps({
            "tournament_id": result.tournament_id,
            "seed": result.seed,
            "totals_tenths": result.totals_tenths,
            "upheld_claims": upheld,
            "scoreboard": result.scoreboard,
            "journal_records": result.journal_text.count("\n") - 1,
        }, indent=2, sort_keys=True))
        return 0

    print(f"tournament {result.tournament_id} finished "
          f"({result.journal_text.count(chr(10)) - 1} journal records)")
    print(f"{'rank':<5}{'team':<14}{'total':>8}  {'upheld claims':>13}")
    standings = sorted(result.scoreboard["rows"],
                       key=lambda row: -row["total_tenths"])
    for rank, row in enumerate(standings, start=1):
        print(f"{rank:<5}{row['team_name']:<14}{row['total']:>8}  "
              f"{upheld.get(row['team_id'], 0):>13}")
    return 0


# -- replay --

def cmd_replay(args) -> int:
    state = replay_journal(args.journal)
    violations = [q.id for q in state.queries.values()
                  if not record_is_sound(q)]
    totals = {
        team_id: state.totals_tenths.get(team_id, 0)
        for team_id in state.teams
    }
    if args.json:
        print(json.dumps({
            "tournament_id": state.id,
            "phase": state.phase.value,
            "applied_records": state.applied,
            "clock_ms": state.clock_ms,
            "teams": {t.id: t.name for t in state.teams.values()},
            "totals_tenths": totals,
            "queries": len(state.queries),
            "falsified_queries": sum(q.falsified
                                     for q in state.queries.values()),
            "ledger_violations": violations,
        }, indent=2, sort_keys=True))
    else:
        print(f"tournament {state.id}: phase {state.phase.value}, "
              f"{state.applied} records, clock {state.clock_ms} ms")
        for team in state.teams.values():
            print(f"  {team.name:<14} {points_str(totals[team.id]):>8}")
        falsified = sum(q.falsified for q in state.queries.values())
        print(f"queries: {len(state.queries)} ({falsified} falsified)")
        if violations:
            print(f"LEDGER VIOLATIONS: {', '.join(violations)}")
        else:
            print("ledger soundness: ok")
    return 1 if violations else 0


# -- export --

def cmd_export(args) -> int:
    if not (args.scoreboard_csv or args.scoreboard_json or args.ledger):
        print("error: nothing to export; pass --scoreboard-csv, "
              "--scoreboard-json, or --ledger", file=sys.stderr)
        return 2
    state = replay_journal(args.journal)
    # a read-only wrapper: never committed to, so the blank journal is inert
    match = Match(state, Journal(), SimulatedClock(state.clock_ms),
                  None, Random(0))
    if args.scoreboard_csv:
        _write(args.scoreboard_csv, match.scoreboard_csv())
    if args.scoreboard_json:
        _write(args.scoreboard_json,
               json.dumps(match.scoreboard_snapshot(), indent=2,
                          sort_keys=True) + "\n")
    if args.ledger:
        records = match.ledger_records(team_id=args.team,
                                       include_truth=args.include_truth)
        _write(args.ledger, json.dumps(records, indent=2, sort_keys=True) + "\n")
    return 0


def _write(path: str, text: str) -> None:
    if path == "-":
        sys.stdout.write(text)
    else:
        Path(path).write_text(text, encoding="utf-8")


# -- eval --

def cmd_eval(args) -> int:
    print(format_rational(evaluate_text(args.expression)))
    return 0


if __name__ == "__main__":
    sys.exit(main())
