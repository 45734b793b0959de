"""HTTP API: routing, auth, role visibility, channel streaming."""

from __future__ import annotations

import json
import threading
import urllib.request

import pytest

from matharena.api import ArenaServer
from matharena.client import ApiError, ArenaClient, ChannelClosed
from matharena.errors import ArenaError, all_error_classes
from matharena.journal import JOURNAL_FORMAT
from matharena.llmclient import CannedClient

ADMIN_TOKEN = "test-admin-token"


@pytest.fixture
def server():
    srv = ArenaServer(admin_token=ADMIN_TOKEN, provider=CannedClient()).start()
    yield srv
    srv.stop()


@pytest.fixture
def admin(server):
    return ArenaClient(server.base_url, ADMIN_TOKEN, timeout_s=5)


def create(admin: ArenaClient, **config) -> str:
    base = dict(simulated_clock=True, rng_seed=7, puzzle_piece_count=1,
                quota_min_queries=0)
    base.update(config)
    created = admin.create_tournament(base)
    return created["tournament_id"]


def add_team(admin: ArenaClient, tid: str, name: str) -> ArenaClient:
    team = admin.register_team(tid, name)
    minted = admin.mint_token(tid, "team", team_id=team["id"], label=name)
    return admin.with_token(minted["token"])


def admit_via_api(admin: ArenaClient, judge: ArenaClient,
                  team: ArenaClient, tid: str) -> None:
    """During Round1: solve one problem, earn the piece, pass the gate."""
    submission = team.submit_solution(tid, "p1", "a complete proof")
    judge.judge(tid, submission["id"], "Correct")
    team_id = submission["team_id"]
    judge.award_piece(tid, team_id, "p1")
    result = team.attempt_entry(tid, "314159")
    assert result["result"] == "Admitted"


def make_judge(admin: ArenaClient, tid: str) -> ArenaClient:
    minted = admin.mint_token(tid, "judge", label="judge-1")
    return admin.with_token(minted["token"])


class TestTournamentCreation:
    def test_create_and_fetch(self, admin):
        tid = create(admin)
        state = admin.state(tid)
        assert state["phase"] == "Registration"
        assert state["rules"]["puzzle_piece_count"] == 1
        assert state["config"]["passcode"] == "314159"  # admin sees all

    def test_create_requires_admin(self, server, admin):
        nobody = ArenaClient(server.base_url, timeout_s=5)
        with pytest.raises(ApiError) as err:
            nobody.create_tournament({})
        assert err.value.status == 403

    def test_bad_config_is_rejected(self, admin):
        with pytest.raises(ApiError) as err:
            admin.create_tournament({"mystery_knob": 1})
        assert (err.value.status, err.value.code) == (400, "invalid_config")

    def test_unknown_tournament_404s(self, admin):
        with pytest.raises(ApiError) as err:
            admin.state("t-ghost")
        assert err.value.status == 404

    def test_unknown_route_404s(self, admin):
        tid = create(admin)
        with pytest.raises(ApiError) as err:
            admin.get(f"/v1/tournaments/{tid}/nonsense")
        assert err.value.status == 404

    def test_listing_shows_phase(self, admin):
        tid = create(admin)
        listed = admin.get("/v1/tournaments")["tournaments"]
        assert {"tournament_id": tid, "phase": "Registration"} in listed


class TestAuth:
    def test_garbage_token_is_401(self, server, admin):
        tid = create(admin)
        impostor = ArenaClient(server.base_url, "not-a-token", timeout_s=5)
        with pytest.raises(ApiError) as err:
            impostor.state(tid)
        assert (err.value.status, err.value.code) == (401, "unauthorized")

    def test_malformed_authorization_header_is_401(self, server, admin):
        tid = create(admin)
        req = urllib.request.Request(
            f"{server.base_url}/v1/tournaments/{tid}")
        req.add_header("Authorization", "Basic dXNlcjpwdw==")
        with pytest.raises(urllib.error.HTTPError) as err:
            urllib.request.urlopen(req, timeout=5)
        assert err.value.code == 401

    def test_spectator_reads_but_cannot_act(self, server, admin):
        tid = create(admin)
        spectator = ArenaClient(server.base_url, timeout_s=5)
        assert spectator.state(tid)["phase"] == "Registration"
        assert spectator.scoreboard(tid)["rows"] == []
        with pytest.raises(ApiError) as err:
            spectator.advance(tid)
        assert err.value.status == 403

    def test_team_tokens_must_name_a_real_team(self, admin):
        tid = create(admin)
        with pytest.raises(ApiError) as err:
            admin.mint_token(tid, "team", team_id="team-404")
        assert err.value.status == 404
        with pytest.raises(ApiError) as err:
            admin.mint_token(tid, "archmage")
        assert err.value.status == 400

    def test_only_admin_mints_tokens(self, server, admin):
        tid = create(admin)
        judge = make_judge(admin, tid)
        with pytest.raises(ApiError) as err:
            judge.mint_token(tid, "judge")
        assert err.value.status == 403


class TestMatchOverHttp:
    def run_to_round2(self, admin, tid):
        judge = make_judge(admin, tid)
        alpha = add_team(admin, tid, "Alpha")
        admin.advance(tid)  # Round1
        admit_via_api(admin, judge, alpha, tid)
        admin.advance(tid)  # Round2
        return judge, alpha

    def test_query_responses_hide_truth_metadata(self, admin):
        tid = create(admin)
        judge, alpha = self.run_to_round2(admin, tid)
        answer = alpha.ask(tid, "Advisor", "How do I solve problem 1?")
        assert set(answer) == {"id", "round", "mode", "kind", "prompt",
                               "answer", "timestamp_ms"}
        mine = alpha.queries(tid)["queries"]
        assert all("falsified" not in q and "ground_truth" not in q
                   for q in mine)
        full = judge.queries(tid)["queries"]
        assert any(q["falsified"] for q in full)

    def test_claim_flow_pays_through_http(self, admin):
        tid = create(admin)
        judge, alpha = self.run_to_round2(admin, tid)
        answer = alpha.ask(tid, "Advisor", "How do I solve problem 1?")
        claim = alpha.file_claim(tid, answer["id"], "the steps contradict")
        assert claim["verdict"] == "Pending"
        verdict = judge.adjudicate(tid, claim["id"])
        assert verdict["verdict"] == "Upheld"
        board = admin.scoreboard(tid)
        row = next(r for r in board["rows"] if r["team_name"] == "Alpha")
        assert row["total_tenths"] == 20

    def test_wrong_phase_surfaces_as_409(self, admin):
        tid = create(admin)
        alpha = add_team(admin, tid, "Alpha")
        with pytest.raises(ApiError) as err:
            alpha.ask(tid, "Calculator", "1+1")
        assert (err.value.status, err.value.code) == (409, "wrong_phase")

    def test_simple_arithmetic_round_trip(self, admin):
        tid = create(admin)
        judge, alpha = self.run_to_round2(admin, tid)
        answer = alpha.ask(tid, "Calculator", "6/4+1")
        assert answer["answer"] == "2.5"
        assert answer["kind"] == "SimpleArithmetic"

    def test_full_match_over_http(self, admin):
        tid = create(admin)
        judge, alpha = self.run_to_round2(admin, tid)
        hint = alpha.ask(tid, "Advisor", "state the key theorem")
        admin.advance(tid)  # Round3Recon
        admin.open_recon(tid)
        recon = alpha.recon_query(tid, "What is the main lemma for p6?")
        assert recon["entry"]["prompt"] == "What is the main lemma for p6?"
        admin.advance(tid)  # Round3Solve (window auto-closes)
        state = admin.state(tid)
        assert state["window"]["state"] == "Closed"
        submission = alpha.submit_solution(
            tid, "final", "the assembled proof",
            cited_hints=[hint["id"], recon["message"]["id"]])
        judge.judge(tid, submission["id"], "Correct", {
            hint["id"]: "UsedCorrectly",
            recon["message"]["id"]: "UsedCorrectly",
        })
        admin.advance(tid)  # Presentation
        judge.record_presentation(tid, submission["team_id"], 90)
        admin.advance(tid)  # Finished
        board = admin.scoreboard(tid)
        row = next(r for r in board["rows"] if r["team_name"] == "Alpha")
        assert row["total_tenths"] == 50 + 5 + 5 + 900
        assert row["round3_weighted"] == "97"  # 0.7*100 + 0.3*90

        csv_text = admin.scoreboard_csv(tid)
        assert csv_text.splitlines()[0].startswith("team,total")

    def test_recon_window_deadline_over_http(self, admin):
        tid = create(admin, recon_duration_s=60)
        judge, alpha = self.run_to_round2(admin, tid)
        admin.advance(tid)
        opened = admin.open_recon(tid)
        assert opened["duration_s"] == 60
        admin.advance_clock(tid, 60_000)
        alpha.recon_query(tid, "right at the wire")  # inclusive deadline
        admin.advance_clock(tid, 1)
        with pytest.raises(ApiError) as err:
            alpha.recon_query(tid, "one ms late")
        assert (err.value.status, err.value.code) == (409, "window_closed")

    def test_clock_is_admin_only_and_simulated_only(self, admin, server):
        tid = create(admin)
        spectator = ArenaClient(server.base_url, timeout_s=5)
        assert spectator.get(f"/v1/tournaments/{tid}/clock")["clock_ms"] == 0
        with pytest.raises(ApiError) as err:
            spectator.advance_clock(tid, 10)
        assert err.value.status == 403

        real_tid = create(admin, simulated_clock=False)
        with pytest.raises(ApiError) as err:
            admin.advance_clock(real_tid, 10)
        assert (err.value.status, err.value.code) == (400, "bad_request")


class TestRoleVisibility:
    def test_team_sees_own_view_in_state(self, admin):
        tid = create(admin)
        alpha = add_team(admin, tid, "Alpha")
        state = alpha.state(tid)
        assert state["you"]["name"] == "Alpha"
        assert "config" not in state  # passcode stays with the admin
        assert "pending_claims" not in state

    def test_judge_sees_queue_but_not_admin_config(self, admin):
        tid = create(admin)
        judge = make_judge(admin, tid)
        alpha = add_team(admin, tid, "Alpha")
        admin.advance(tid)
        alpha.submit_solution(tid, "p1", "work in progress")
        state = judge.state(tid)
        assert len(state["pending_judgements"]) == 1
        assert "config" not in state

    def test_transcript_requires_team_token(self, admin):
        tid = create(admin)
        judge = make_judge(admin, tid)
        with pytest.raises(ApiError) as err:
            judge.transcript(tid)
        assert err.value.status == 403

    def test_submissions_listing_is_scoped(self, admin):
        tid = create(admin)
        judge = make_judge(admin, tid)
        alpha = add_team(admin, tid, "Alpha")
        beta = add_team(admin, tid, "Beta")
        admin.advance(tid)
        alpha.submit_solution(tid, "p1", "alpha's work")
        beta.submit_solution(tid, "p1", "beta's work")
        assert len(judge.get(f"/v1/tournaments/{tid}/submissions")
                   ["submissions"]) == 2
        mine = alpha.get(f"/v1/tournaments/{tid}/submissions")["submissions"]
        assert [s["payload"] for s in mine] == ["alpha's work"]

    def test_journal_is_admin_only(self, admin, server):
        tid = create(admin)
        text = admin.journal_text(tid)
        header = json.loads(text.splitlines()[0])
        assert header["format"] == JOURNAL_FORMAT
        kinds = [json.loads(line)["kind"] for line in text.splitlines()[1:]]
        assert kinds[0] == "Created"

        judge = make_judge(admin, tid)
        with pytest.raises(ApiError) as err:
            judge.get(f"/v1/tournaments/{tid}/journal")
        assert err.value.status == 403


class TestFeedEndpoint:
    def test_feed_pagination(self, admin):
        tid = create(admin)
        judge, alpha = TestMatchOverHttp().run_to_round2(admin, tid)
        answer = alpha.ask(tid, "Advisor", "How do I solve problem 1?")
        claim = alpha.file_claim(tid, answer["id"], "contradiction")
        judge.adjudicate(tid, claim["id"])  # ScoreChanged event
        admin.advance(tid)
        admin.open_recon(tid)               # WindowOpened event

        spectator = ArenaClient(admin.base_url, timeout_s=5)
        page = spectator.feed(tid)
        kinds = [e["kind"] for e in page["events"]]
        assert kinds == ["ScoreChanged", "WindowOpened"]
        assert page["next"] == 2
        rest = spectator.feed(tid, start=1)
        assert [e["kind"] for e in rest["events"]] == ["WindowOpened"]


class TestChannel:
    def collect(self, client, tid, *, stop_after, **kwargs):
        frames = []
        stream = client.channel(tid, timeout_s=5, **kwargs)
        for frame in stream:
            if frame["type"] == "ping":
                continue
            frames.append(frame)
            if stop_after(frames):
                stream.close()
                break
        return frames

    def test_spectator_stream_carries_feed_only(self, admin):
        tid = create(admin)
        judge, alpha = TestMatchOverHttp().run_to_round2(admin, tid)
        answer = alpha.ask(tid, "Advisor", "How do I solve problem 1?")
        claim = alpha.file_claim(tid, answer["id"], "contradiction")
        judge.adjudicate(tid, claim["id"])

        spectator = ArenaClient(admin.base_url, timeout_s=5)
        frames = self.collect(
            spectator, tid,
            stop_after=lambda fs: any(f["type"] == "feed" for f in fs))
        assert frames[0]["type"] == "hello"
        feed_frames = [f for f in frames if f["type"] == "feed"]
        assert feed_frames[0]["event"]["kind"] == "ScoreChanged"
        assert all(f["type"] != "private" for f in frames)

    def test_team_stream_merges_private_backlog(self, admin):
        tid = create(admin)
        judge, alpha = TestMatchOverHttp().run_to_round2(admin, tid)
        alpha.ask(tid, "Calculator", "2+3")
        frames = self.collect(
            alpha, tid,
            stop_after=lambda fs: any(f["type"] == "private" for f in fs))
        private = [f for f in frames if f["type"] == "private"]
        assert private[0]["message"]["answer"] == "5"
        assert "falsified" not in private[0]["message"]

    def test_live_frames_follow_backlog(self, admin, server):
        tid = create(admin)
        judge, alpha = TestMatchOverHttp().run_to_round2(admin, tid)
        admin.advance(tid)

        got_window = threading.Event()
        frames: list[dict] = []

        def reader():
            stream = ArenaClient(server.base_url, timeout_s=5).channel(tid)
            try:
                for frame in stream:
                    frames.append(frame)
                    if frame["type"] == "hello":
                        got_window.set()  # connected; trigger the event
                    if (frame["type"] == "feed"
                            and frame["event"]["kind"] == "WindowOpened"):
                        stream.close()
                        return
            except ChannelClosed:
                pass

        thread = threading.Thread(target=reader, daemon=True)
        thread.start()
        assert got_window.wait(timeout=5)
        admin.open_recon(tid)
        thread.join(timeout=5)
        assert not thread.is_alive()
        assert [f["event"]["kind"] for f in frames
                if f["type"] == "feed"] == ["WindowOpened"]

    def test_resume_from_sequence_skips_backlog(self, admin):
        tid = create(admin)
        judge, alpha = TestMatchOverHttp().run_to_round2(admin, tid)
        answer = alpha.ask(tid, "Advisor", "How do I solve problem 1?")
        claim = alpha.file_claim(tid, answer["id"], "contradiction")
        judge.adjudicate(tid, claim["id"])   # feed sequence 0
        admin.advance(tid)
        admin.open_recon(tid)                # feed sequence 1

        spectator = ArenaClient(admin.base_url, timeout_s=5)
        frames = self.collect(
            spectator, tid, from_sequence=1,
            stop_after=lambda fs: any(f["type"] == "feed" for f in fs))
        feed_frames = [f for f in frames if f["type"] == "feed"]
        assert feed_frames[0]["event"]["sequence"] == 1
        assert feed_frames[0]["event"]["kind"] == "WindowOpened"


class TestCors:
    def test_preflight(self, server, admin):
        req = urllib.request.Request(f"{server.base_url}/v1/tournaments",
                                     method="OPTIONS")
        with urllib.request.urlopen(req, timeout=5) as resp:
            assert resp.status == 204
            assert resp.headers["Access-Control-Allow-Origin"] == "*"

    def test_responses_carry_cors_headers(self, server, admin):
        tid = create(admin)
        req = urllib.request.Request(f"{server.base_url}/v1/tournaments/{tid}")
        with urllib.request.urlopen(req, timeout=5) as resp:
            assert resp.headers["Access-Control-Allow-Origin"] == "*"


class TestKeepAlive:
    def test_unread_post_body_does_not_poison_the_connection(self, server,
                                                             admin):
        """A POST body the handler never parses must still be drained.

        Browsers and Node reuse connections; if the body of a request to a
        body-less endpoint (like advance) stayed in the socket, it would be
        parsed as the start of the next request line.
        """
        import http.client

        tid = create(admin)
        host, port = server.address
        conn = http.client.HTTPConnection(host, port, timeout=5)
        try:
            headers = {"Authorization": f"Bearer {ADMIN_TOKEN}",
                       "Content-Type": "application/json"}
            for _ in range(2):  # Registration -> Round1 -> Round2
                conn.request("POST", f"/v1/tournaments/{tid}/advance",
                             body=b"{}", headers=headers)
                resp = conn.getresponse()
                assert resp.status == 200
                resp.read()
            conn.request("GET", f"/v1/tournaments/{tid}", headers=headers)
            resp = conn.getresponse()
            assert resp.status == 200
            assert json.loads(resp.read())["phase"] == "Round2"
        finally:
            conn.close()


class TestErrorContract:
    ALLOWED_STATUSES = {400, 401, 403, 404, 409, 500, 503}

    def test_every_error_class_maps_to_a_status(self):
        classes = all_error_classes()
        assert ArenaError in classes
        codes = {}
        for cls in classes:
            assert cls.http_status in self.ALLOWED_STATUSES, cls
            assert cls.code, cls
            assert cls.code == cls.code.lower()
            assert cls.code not in codes or codes[cls.code] is cls, (
                f"duplicate error code {cls.code}")
            codes[cls.code] = cls

    def test_error_body_shape(self, admin):
        with pytest.raises(ApiError) as err:
            admin.state("t-ghost")
        assert err.value.code == "not_found"
        assert "t-ghost" in err.value.message
