"""Scripted competitors and a scripted judge, driven over the HTTP API.

The bots differ only in how they treat AI answers:

* ``trusting``  — believes everything: never files deception claims and
  cites every answer it received on its final submission.
* ``skeptic``   — distrusts everything: files a claim on every answer and
  cites only answers whose kind is mechanically trustworthy (fact lookups
  and in-process arithmetic).
* ``mixed:p``   — spot-checks: with probability p it treats an advisory
  answer like the skeptic would (claim it, don't cite it), otherwise like
  the truster.

Bots act strictly sequentially in team order, the clock is simulated and
advanced in fixed beats, and the canned provider is deterministic, so a
simulation is a pure function of its seed: re-running one yields a
byte-identical journal.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from random import Random

from .client import ArenaClient
from .errors import InvalidConfig

TRUSTED_KINDS = {"FactLookup", "SimpleArithmetic"}

FACT_PROMPT = "What is the formula for quantity {i}?"
PLAN_PROMPT = "How do I solve problem {i}?"
CALC_PROMPT = "{a}+{b}*{c}"
RECON_PROMPT = "What is the key idea for the final problem?"

PRESENTATION_POINTS = 60
CLOCK_BEAT_MS = 1_000


@dataclass(frozen=True)
class BotProfile:
    name: str
    style: str  # "trusting" | "skeptic" | "mixed"
    p_verify: float = 0.0

    @classmethod
    def parse(cls, text: str, index: int = 0) -> "BotProfile":
        """Parse "trusting", "skeptic", or "mixed:0.3"."""
        style, _, arg = text.strip().partition(":")
        name = f"{style.capitalize()}-{index + 1}"
        if style in ("trusting", "skeptic"):
            if arg:
                raise InvalidConfig(f"{style} takes no parameter")
            return cls(name, style)
        if style == "mixed":
            try:
                p = float(arg or "0.5")
            except ValueError:
                raise InvalidConfig(f"bad mixed probability {arg!r}")
            if not 0 <= p <= 1:
                raise InvalidConfig("mixed probability must lie in [0, 1]")
            return cls(name, style, p)
        raise InvalidConfig(f"unknown bot profile {text!r}")


class TeamBot:
    def __init__(self, profile: BotProfile, client: ArenaClient, tid: str,
                 team_id: str, rng: Random):
        self.profile = profile
        self.client = client
        self.tid = tid
        self.team_id = team_id
        self.rng = rng
        self.answers: list[dict] = []    # team views, in arrival order
        self.distrusted: set[str] = set()

    # -- round 1 --

    def solve_round1(self, problems: list[str], judge: "JudgeBot") -> None:
        for problem_id in problems:
            submission = self.client.submit_solution(
                self.tid, problem_id,
                f"{self.profile.name}'s solution to {problem_id}")
            judge.client.judge(self.tid, submission["id"], "Correct")
            judge.client.award_piece(self.tid, self.team_id, problem_id)

    def pass_gate(self, passcode: str) -> None:
        result = self.client.attempt_entry(self.tid, passcode)
        if result["result"] != "Admitted":
            raise AssertionError(
                f"{self.profile.name} failed the entry gate: {result}")

    # -- round 2 --

    def ask_round2(self, quota: int) -> None:
        for i in range(quota):
            if i % 3 == 2:
                answer = self.client.ask(self.tid, "Advisor",
                                         FACT_PROMPT.format(i=i + 1))
            else:
                answer = self.client.ask(self.tid, "Advisor",
                                         PLAN_PROMPT.format(i=i + 1))
            self._received(answer)
        calc = self.client.ask(self.tid, "Calculator", CALC_PROMPT.format(
            a=quota, b=len(self.answers), c=3))
        self._received(calc)

    # -- round 3 --

    def recon(self) -> None:
        result = self.client.recon_query(self.tid, RECON_PROMPT)
        self._received(result["message"])

    def submit_final(self) -> dict:
        return self.client.submit_solution(
            self.tid, "final",
            f"{self.profile.name}'s assembled final proof",
            cited_hints=self.cited_hints())

    # -- trust policy --

    def _received(self, answer: dict) -> None:
        self.answers.append(answer)
        if self._distrusts(answer):
            self.distrusted.add(answer["id"])
            self.client.file_claim(
                self.tid, answer["id"],
                f"{self.profile.name} disputes answer {answer['id']}")

    def _distrusts(self, answer: dict) -> bool:
        if self.profile.style == "trusting":
            return False
        if self.profile.style == "skeptic":
            return True
        if answer["kind"] in TRUSTED_KINDS:
            return False
        return self.rng.random() < self.profile.p_verify

    def cited_hints(self) -> list[str]:
        if self.profile.style == "trusting":
            return [a["id"] for a in self.answers]
        if self.profile.style == "skeptic":
            return [a["id"] for a in self.answers
                    if a["kind"] in TRUSTED_KINDS]
        return [a["id"] for a in self.answers
                if a["id"] not in self.distrusted]


class JudgeBot:
    """Marks hints straight from the ledger and clears all pending work."""

    def __init__(self, client: ArenaClient, tid: str):
        self.client = client
        self.tid = tid

    def _truth(self) -> dict[str, bool]:
        records = self.client.queries(self.tid)["queries"]
        return {r["id"]: r["falsified"] for r in records}

    def adjudicate_pending(self) -> list[dict]:
        claims = self.client.claims(self.tid)["claims"]
        verdicts = []
        for claim in claims:
            if claim["verdict"] == "Pending":
                verdicts.append(self.client.adjudicate(self.tid, claim["id"]))
        return verdicts

    def judge_pending_finals(self) -> None:
        truth = self._truth()
        subs = self.client.get(
            f"/v1/tournaments/{self.tid}/submissions")["submissions"]
        for submission in subs:
            if submission["verdict"] != "Pending":
                continue
            marks = {
                hint: ("Misled" if truth[hint] else "UsedCorrectly")
                for hint in submission["cited_hints"]
            }
            self.client.judge(self.tid, submission["id"], "Correct", marks)

    def present_all(self, team_ids: list[str]) -> None:
        for team_id in team_ids:
            self.client.record_presentation(self.tid, team_id,
                                            PRESENTATION_POINTS)


@dataclass
class SimulationResult:
    tournament_id: str
    seed: int
    profiles: list[BotProfile]
    teams: dict[str, str]            # team_id -> profile name
    scoreboard: dict
    journal_text: str
    ledger: list[dict]               # judge view, truth included
    claims: list[dict]
    feed: list[dict] = field(default_factory=list)

    @property
    def totals_tenths(self) -> dict[str, int]:
        return {row["team_id"]: row["total_tenths"]
                for row in self.scoreboard["rows"]}


def run_simulation(seed: int, profiles: list[BotProfile], *,
                   config_overrides: dict | None = None,
                   journal_dir: str | None = None) -> SimulationResult:
    """Run one complete simulated tournament in-process.

    Spins up a private HTTP server, drives every participant through the
    bundled clients, and tears the server down again.  Deterministic in
    (seed, profiles, config_overrides).
    """
    from .api import ArenaServer
    from .llmclient import CannedClient

    config = {
        "simulated_clock": True,
        "rng_seed": seed,
        **(config_overrides or {}),
    }
    tournament_id = f"match-{seed:016x}"
    server = ArenaServer(provider=CannedClient(),
                         journal_dir=journal_dir).start()
    try:
        admin = ArenaClient(server.base_url, server.admin_token, timeout_s=30)
        created = admin.create_tournament(config, tournament_id=tournament_id)
        tid = created["tournament_id"]
        rules = created["config"]

        judge_token = admin.mint_token(tid, "judge", label="judge-bot")
        judge = JudgeBot(admin.with_token(judge_token["token"]), tid)

        bots: list[TeamBot] = []
        for index, profile in enumerate(profiles):
            team = admin.register_team(tid, profile.name)
            minted = admin.mint_token(tid, "team", team_id=team["id"],
                                      label=profile.name)
            bots.append(TeamBot(profile, admin.with_token(minted["token"]),
                                tid, team["id"],
                                Random(seed * 1_000_003 + index)))

        def beat():
            admin.advance_clock(tid, CLOCK_BEAT_MS)

        problems = [f"r1-{i + 1}" for i in range(rules["puzzle_piece_count"])]

        admin.advance(tid)                       # Round1
        for bot in bots:
            beat()
            bot.solve_round1(problems, judge)
            bot.pass_gate(rules["passcode"])

        admin.advance(tid)                       # Round2
        for bot in bots:
            beat()
            bot.ask_round2(rules["quota_min_queries"])
        beat()
        judge.adjudicate_pending()

        admin.advance(tid)                       # Round3Recon
        admin.open_recon(tid)
        for bot in bots:
            beat()
            bot.recon()
        beat()
        judge.adjudicate_pending()

        admin.advance(tid)                       # Round3Solve
        for bot in bots:
            beat()
            bot.submit_final()
        beat()
        judge.judge_pending_finals()

        admin.advance(tid)                       # Round3Presentation
        beat()
        judge.present_all([bot.team_id for bot in bots])

        admin.advance(tid)                       # Finished

        return SimulationResult(
            tournament_id=tid,
            seed=seed,
            profiles=list(profiles),
            teams={bot.team_id: bot.profile.name for bot in bots},
            scoreboard=admin.scoreboard(tid),
            journal_text=admin.journal_text(tid),
            ledger=judge.client.queries(tid)["queries"],
            claims=judge.client.claims(tid)["claims"],
            feed=admin.feed(tid)["events"],
        )
    finally:
        server.stop()
