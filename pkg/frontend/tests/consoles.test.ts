/** Console models against a scripted in-memory transport: error surfacing,
 * conflict banners, claim review pairing, and no-local-score guarantees.
 */

import { describe, expect, it } from "vitest";
import { ArenaClient } from "../src/client.js";
import { JudgeConsole } from "../src/judgeconsole.js";
import { TeamConsole } from "../src/teamconsole.js";

type Route = [status: number, body: unknown];

/** fetch stub keyed by "METHOD path"; unlisted routes 404. */
function fakeFetch(routes: Record<string, Route | ((body: unknown) => Route)>): typeof fetch {
  return (async (input: string | URL | Request, init?: RequestInit) => {
    const url = typeof input === "string" ? input : input instanceof URL ? input.href : input.url;
    const path = url.replace(/^https?:\/\/[^/]+/, "");
    const key = `${init?.method ?? "GET"} ${path}`;
    const route = routes[key];
    if (route === undefined) {
      return new Response(JSON.stringify({ error: { code: "not_found", message: key } }), {
        status: 404,
      });
    }
    const body = init?.body ? JSON.parse(String(init.body)) : undefined;
    const [status, payload] = typeof route === "function" ? route(body) : route;
    return new Response(JSON.stringify(payload), { status });
  }) as typeof fetch;
}

const SNAPSHOT = {
  tournament_id: "t-1",
  phase: "Round2",
  clock_ms: 5_000,
  teams: [],
  window: null,
  feed_next: 0,
  rules: {
    quota_min_queries: 15,
    quota_penalty_per_missing: "0.5",
    recon_duration_s: 900,
    ai_interaction_weight: "0.3",
    puzzle_piece_count: 6,
    max_entry_attempts: 3,
    recon_mode: "Advisor",
    round1_counts_toward_total: false,
    round3_max_solution_points: "5",
    simulated_clock: true,
  },
};

const EMPTY_REFRESH = {
  "GET /v1/tournaments/t-1": [200, SNAPSHOT] as Route,
  "GET /v1/tournaments/t-1/feed?from=0": [200, { events: [], next: 0 }] as Route,
  "GET /v1/tournaments/t-1/transcript?from=0": [200, { messages: [], next: 0 }] as Route,
  "GET /v1/tournaments/t-1/claims": [200, { claims: [] }] as Route,
  "GET /v1/tournaments/t-1/queries": [200, { queries: [] }] as Route,
  "GET /v1/tournaments/t-1/scoreboard": [
    200,
    { tournament_id: "t-1", phase: "Round2", rows: [] },
  ] as Route,
};

function teamConsole(routes: Record<string, Route | ((body: unknown) => Route)>): TeamConsole {
  const client = new ArenaClient({
    baseUrl: "http://test",
    token: "tk",
    fetchImpl: fakeFetch({ ...EMPTY_REFRESH, ...routes }),
  });
  return new TeamConsole(client, "t-1");
}

function judgeConsole(routes: Record<string, Route | ((body: unknown) => Route)>): JudgeConsole {
  const client = new ArenaClient({
    baseUrl: "http://test",
    token: "jk",
    fetchImpl: fakeFetch({ ...EMPTY_REFRESH, ...routes }),
  });
  return new JudgeConsole(client, "t-1");
}

describe("team console error surfacing", () => {
  it("renders WindowClosed inline instead of throwing", async () => {
    const console_ = teamConsole({
      "POST /v1/tournaments/t-1/recon/queries": [
        409,
        { error: { code: "window_closed", message: "the recon window is closed" } },
      ],
    });
    await console_.load();
    const result = await console_.sendReconQuery("too late");
    expect(result).toBeNull();
    expect(console_.notice).toBe("window_closed: the recon window is closed");
    expect(console_.renderHtml()).toContain("window_closed");
  });

  it("renders NotAdmitted inline", async () => {
    const console_ = teamConsole({
      "POST /v1/tournaments/t-1/queries": [
        403,
        { error: { code: "not_admitted", message: "team never passed the entry gate" } },
      ],
    });
    await console_.load();
    expect(await console_.sendQuery("Advisor", "hello")).toBeNull();
    expect(console_.notice).toContain("not_admitted");
  });

  it("mirrors the quota counter from the snapshot", async () => {
    const console_ = teamConsole({
      "GET /v1/tournaments/t-1": [
        200,
        {
          ...SNAPSHOT,
          you: {
            id: "team-1",
            name: "A",
            active: true,
            admitted: true,
            pieces: [],
            entry_attempts_used: 1,
            round2_query_count: 7,
            private_next: 0,
          },
        },
      ],
    });
    await console_.load();
    expect(console_.quotaProgress()).toEqual({ made: 7, quota: 15 });
    expect(console_.renderHtml()).toContain("queries: 7/15");
  });

  it("tracks claim outcomes per transcript entry", async () => {
    const console_ = teamConsole({
      "GET /v1/tournaments/t-1/claims": [
        200,
        {
          claims: [
            {
              id: "c-1",
              team_id: "team-1",
              query_id: "q-9",
              explanation: "fishy",
              verdict: "Rejected",
              filed_ms: 0,
            },
          ],
        },
      ],
    });
    await console_.load();
    expect(console_.claimOutcome("q-9")).toBe("Rejected");
    expect(console_.claimOutcome("q-1")).toBeNull();
    expect(console_.renderHtml()).toContain("claim rejected");
  });
});

describe("judge console", () => {
  it("shows a conflict banner on double judging and keeps state", async () => {
    const console_ = judgeConsole({
      "POST /v1/tournaments/t-1/submissions/s-1/verdict": [
        409,
        { error: { code: "already_judged", message: "submission s-1 already judged" } },
      ],
    });
    await console_.load();
    const result = await console_.judge("s-1", "Correct", {});
    expect(result).toBeNull();
    expect(console_.conflict).toBe("already_judged: submission s-1 already judged");
    expect(console_.renderHtml()).toContain("already_judged");
  });

  it("pairs claims with truth-annotated ledger records", async () => {
    const record = {
      id: "q-2",
      team_id: "team-1",
      round: "R2",
      mode: "Advisor",
      kind: "StrategyRequest",
      prompt: "how?",
      answer: "flawed plan",
      emitted_answer: "flawed plan",
      ground_truth: "sound plan",
      falsified: true,
      flaw_kind: "FlawedPlan",
      flaw_note: null,
      timestamp_ms: 0,
    };
    const console_ = judgeConsole({
      "GET /v1/tournaments/t-1/queries": [200, { queries: [record] }],
      "GET /v1/tournaments/t-1/claims": [
        200,
        {
          claims: [
            {
              id: "c-1",
              team_id: "team-1",
              query_id: "q-2",
              explanation: "wrong",
              verdict: "Pending",
              filed_ms: 0,
            },
          ],
        },
      ],
    });
    await console_.load();
    const review = console_.claimReview();
    expect(review).toHaveLength(1);
    expect(review[0]!.record?.falsified).toBe(true);
    expect(review[0]!.record?.ground_truth).toBe("sound plan");
    // side-by-side in the rendered ledger
    const html = console_.renderHtml();
    expect(html).toContain("flawed plan");
    expect(html).toContain("sound plan");
    expect(html).toContain("FALSIFIED");
  });

  it("reads round-3 totals from the scoreboard, computing nothing", async () => {
    const console_ = judgeConsole({
      "GET /v1/tournaments/t-1/scoreboard": [
        200,
        {
          tournament_id: "t-1",
          phase: "Round3Presentation",
          rows: [
            {
              team_id: "team-1",
              team_name: "A",
              total_tenths: 1090,
              total: "109",
              rules: {},
              round3_weighted: "59",
            },
          ],
        },
      ],
    });
    await console_.load();
    expect(console_.displayedRound3Total("team-1")).toBe("59");
    expect(console_.displayedRound3Total("team-9")).toBeNull();
  });
});
