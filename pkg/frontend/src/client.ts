/** Thin typed client for the arena server's documented HTTP endpoints. */

import type {
  ChannelFrame,
  ClaimView,
  FeedEvent,
  HintMark,
  JudgeQueryView,
  PrivateMessage,
  QueryMode,
  Role,
  Scoreboard,
  StateSnapshot,
  SubmissionView,
  TeamPublicView,
  TeamQueryView,
  Verdict,
} from "./protocol.js";

export class ApiError extends Error {
  constructor(
    readonly status: number,
    readonly code: string,
    message: string,
  ) {
    super(message);
    this.name = "ApiError";
  }
}

export interface ClientOptions {
  baseUrl: string;
  token?: string;
  fetchImpl?: typeof fetch;
}

export class ArenaClient {
  private readonly baseUrl: string;
  private readonly token: string | undefined;
  private readonly fetchImpl: typeof fetch;

  constructor(options: ClientOptions) {
    this.baseUrl = options.baseUrl.replace(/\/$/, "");
    this.token = options.token;
    this.fetchImpl = options.fetchImpl ?? fetch;
  }

  withToken(token: string): ArenaClient {
    return new ArenaClient({
      baseUrl: this.baseUrl,
      token,
      fetchImpl: this.fetchImpl,
    });
  }

  private async call<T>(method: string, path: string, body?: unknown): Promise<T> {
    const headers: Record<string, string> = {};
    if (this.token) {
      headers["Authorization"] = `Bearer ${this.token}`;
    }
    const init: RequestInit = { method, headers };
    if (body !== undefined) {
      headers["Content-Type"] = "application/json";
      init.body = JSON.stringify(body);
    }
    const response = await this.fetchImpl(this.baseUrl + path, init);
    const text = await response.text();
    if (!response.ok) {
      let code = "unknown";
      let message = text;
      try {
        const parsed = JSON.parse(text) as { error?: { code: string; message: string } };
        if (parsed.error) {
          code = parsed.error.code;
          message = parsed.error.message;
        }
      } catch {
        // non-JSON error body; keep raw text as the message
      }
      throw new ApiError(response.status, code, message);
    }
    return (text ? JSON.parse(text) : {}) as T;
  }

  // -- tournament collection --

  createTournament(config: Record<string, unknown>, tournamentId?: string) {
    const body: Record<string, unknown> = { config };
    if (tournamentId !== undefined) {
      body["tournament_id"] = tournamentId;
    }
    return this.call<{ tournament_id: string; phase: string }>("POST", "/v1/tournaments", body);
  }

  listTournaments() {
    return this.call<{ tournaments: { tournament_id: string; phase: string }[] }>(
      "GET",
      "/v1/tournaments",
    );
  }

  // -- per-tournament --

  state(tid: string) {
    return this.call<StateSnapshot>("GET", `/v1/tournaments/${tid}`);
  }

  mintToken(tid: string, role: Role, teamId?: string, label = "") {
    const body: Record<string, unknown> = { role, label };
    if (teamId !== undefined) {
      body["team_id"] = teamId;
    }
    return this.call<{ token: string }>("POST", `/v1/tournaments/${tid}/tokens`, body);
  }

  registerTeam(tid: string, name: string) {
    return this.call<TeamPublicView>("POST", `/v1/tournaments/${tid}/teams`, { name });
  }

  advance(tid: string) {
    return this.call<{ phase: string }>("POST", `/v1/tournaments/${tid}/advance`, {});
  }

  advanceClock(tid: string, deltaMs: number) {
    return this.call<{ clock_ms: number }>("POST", `/v1/tournaments/${tid}/clock`, {
      delta_ms: deltaMs,
    });
  }

  awardPiece(tid: string, teamId: string, problemId: string) {
    return this.call<TeamPublicView>("POST", `/v1/tournaments/${tid}/pieces`, {
      team_id: teamId,
      problem_id: problemId,
    });
  }

  attemptEntry(tid: string, passcode: string) {
    return this.call<{ result: string; attempts_used: number; admitted: boolean }>(
      "POST",
      `/v1/tournaments/${tid}/entry`,
      { passcode },
    );
  }

  listSubmissions(tid: string) {
    return this.call<{ submissions: SubmissionView[] }>("GET", `/v1/tournaments/${tid}/submissions`);
  }

  submitSolution(tid: string, problemId: string, payload: string, citedHints: string[] = []) {
    return this.call<SubmissionView>("POST", `/v1/tournaments/${tid}/submissions`, {
      problem_id: problemId,
      payload,
      cited_hints: citedHints,
    });
  }

  judgeSubmission(
    tid: string,
    submissionId: string,
    verdict: Verdict,
    hintMarks: Record<string, HintMark> = {},
  ) {
    return this.call<SubmissionView>(
      "POST",
      `/v1/tournaments/${tid}/submissions/${submissionId}/verdict`,
      { verdict, hint_marks: hintMarks },
    );
  }

  ask(tid: string, mode: QueryMode, text: string) {
    return this.call<TeamQueryView>("POST", `/v1/tournaments/${tid}/queries`, { mode, text });
  }

  /** Team tokens get their own sanitized records; judges get truth-annotated ones. */
  listQueries<T = TeamQueryView | JudgeQueryView>(tid: string) {
    return this.call<{ queries: T[] }>("GET", `/v1/tournaments/${tid}/queries`);
  }

  fileClaim(tid: string, queryId: string, explanation: string) {
    return this.call<ClaimView>("POST", `/v1/tournaments/${tid}/claims`, {
      query_id: queryId,
      explanation,
    });
  }

  listClaims(tid: string) {
    return this.call<{ claims: ClaimView[] }>("GET", `/v1/tournaments/${tid}/claims`);
  }

  adjudicateClaim(tid: string, claimId: string) {
    return this.call<ClaimView>("POST", `/v1/tournaments/${tid}/claims/${claimId}/adjudicate`);
  }

  openRecon(tid: string) {
    return this.call<{ opened_at_ms: number; duration_s: number; deadline_ms: number }>(
      "POST",
      `/v1/tournaments/${tid}/recon/open`,
      {},
    );
  }

  postReconQuery(tid: string, text: string) {
    return this.call<{ entry: Record<string, unknown>; message: TeamQueryView }>(
      "POST",
      `/v1/tournaments/${tid}/recon/queries`,
      { text },
    );
  }

  recordPresentation(tid: string, teamId: string, points: number) {
    return this.call<{ team_id: string; delta_tenths: number; points: string }>(
      "POST",
      `/v1/tournaments/${tid}/presentation`,
      { team_id: teamId, points },
    );
  }

  scoreboard(tid: string) {
    return this.call<Scoreboard>("GET", `/v1/tournaments/${tid}/scoreboard`);
  }

  feed(tid: string, from = 0) {
    return this.call<{ events: FeedEvent[]; next: number }>(
      "GET",
      `/v1/tournaments/${tid}/feed?from=${from}`,
    );
  }

  transcript(tid: string, from = 0) {
    return this.call<{ messages: PrivateMessage[]; next: number }>(
      "GET",
      `/v1/tournaments/${tid}/transcript?from=${from}`,
    );
  }

  /** Open the live NDJSON channel and yield frames until the stream ends. */
  async *channel(
    tid: string,
    fromSequence = 0,
    privateFrom = 0,
    signal?: AbortSignal,
  ): AsyncGenerator<ChannelFrame> {
    const headers: Record<string, string> = {};
    if (this.token) {
      headers["Authorization"] = `Bearer ${this.token}`;
    }
    const url =
      `${this.baseUrl}/v1/tournaments/${tid}/channel` +
      `?from_sequence=${fromSequence}&private_from=${privateFrom}`;
    const init: RequestInit = { headers };
    if (signal !== undefined) {
      init.signal = signal;
    }
    const response = await this.fetchImpl(url, init);
    if (!response.ok || response.body === null) {
      throw new ApiError(response.status, "channel_failed", await response.text());
    }
    const reader = response.body.getReader();
    const decoder = new TextDecoder();
    let buffer = "";
    for (;;) {
      const { done, value } = await reader.read();
      if (done) {
        break;
      }
      buffer += decoder.decode(value, { stream: true });
      let newline = buffer.indexOf("\n");
      while (newline >= 0) {
        const line = buffer.slice(0, newline).trim();
        buffer = buffer.slice(newline + 1);
        if (line) {
          yield JSON.parse(line) as ChannelFrame;
        }
        newline = buffer.indexOf("\n");
      }
    }
  }
}
