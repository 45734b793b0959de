/** The team console: chat with the AI, flag suspect answers, watch the
 * opponents' prompt feed, cite transcript entries in submissions.
 *
 * The console is a pure function of server data: `load()` rebuilds the
 * entire view from `feed?from=0` + `transcript?from=0` + the state
 * snapshot, and `refresh()` folds in deltas.  A mid-match page reload is
 * therefore exactly `new TeamConsole(...).load()`.
 */

import { ApiError, ArenaClient } from "./client.js";
import type {
  ClaimView,
  PrivateMessage,
  Scoreboard,
  StateSnapshot,
  SubmissionView,
  TeamQueryView,
  QueryMode,
} from "./protocol.js";
import {
  renderClaims,
  renderFeed,
  renderNotice,
  renderPhaseBanner,
  renderQuotaCounter,
  renderReconFeed,
  renderScoreboard,
  renderTranscript,
} from "./render.js";
import {
  anchorClock,
  applyFeed,
  applyPhase,
  emptyView,
  orderedTranscript,
  type ViewState,
} from "./viewstate.js";

export class TeamConsole {
  readonly client: ArenaClient;
  readonly tid: string;

  view: ViewState = emptyView();
  transcript: PrivateMessage[] = [];
  claims: ClaimView[] = [];
  scoreboard: Scoreboard | null = null;
  snapshot: StateSnapshot | null = null;
  /** last inline server-error notice (WindowClosed, NotAdmitted, ...) */
  notice: string | null = null;

  private feedNext = 0;
  private privateNext = 0;

  constructor(client: ArenaClient, tid: string) {
    this.client = client;
    this.tid = tid;
  }

  /** Full (re)construction from sequence zero — the page-load path. */
  async load(): Promise<void> {
    this.view = emptyView();
    this.transcript = [];
    this.feedNext = 0;
    this.privateNext = 0;
    await this.refresh();
  }

  /** Fold in everything the server has beyond our cursors. */
  async refresh(): Promise<void> {
    const snapshot = await this.client.state(this.tid);
    this.snapshot = snapshot;
    this.view = applyPhase(this.view, snapshot.phase);
    this.view = anchorClock(this.view, snapshot.clock_ms);

    const feed = await this.client.feed(this.tid, this.feedNext);
    for (const event of feed.events) {
      this.view = applyFeed(this.view, event);
    }
    this.feedNext = feed.next;

    const transcript = await this.client.transcript(this.tid, this.privateNext);
    this.transcript = orderedTranscript([...this.transcript, ...transcript.messages]);
    this.privateNext = transcript.next;

    const claims = await this.client.listClaims(this.tid);
    this.claims = claims.claims;
    this.scoreboard = await this.client.scoreboard(this.tid);
  }

  /** Queries made in the quota-bearing round, mirrored from the snapshot. */
  quotaProgress(): { made: number; quota: number } {
    const made = this.snapshot?.you?.round2_query_count ?? 0;
    const quota = this.snapshot?.rules.quota_min_queries ?? 0;
    return { made, quota };
  }

  /** Send one AI query; the transcript entry comes back via the server. */
  async sendQuery(mode: QueryMode, text: string): Promise<TeamQueryView | null> {
    return this.guarded(async () => {
      const answer = await this.client.ask(this.tid, mode, text);
      await this.refresh();
      return answer;
    });
  }

  /** Post a recon prompt (public prompt, private answer). */
  async sendReconQuery(text: string): Promise<TeamQueryView | null> {
    return this.guarded(async () => {
      const result = await this.client.postReconQuery(this.tid, text);
      await this.refresh();
      return result.message;
    });
  }

  /** Flag a transcript entry as AI deception; outcome arrives on refresh. */
  async flagResponse(queryId: string, explanation: string): Promise<ClaimView | null> {
    return this.guarded(async () => {
      const claim = await this.client.fileClaim(this.tid, queryId, explanation);
      await this.refresh();
      return claim;
    });
  }

  /** Submit a solution citing transcript entries as hints. */
  async submitSolution(
    problemId: string,
    payload: string,
    citedHintIds: string[],
  ): Promise<SubmissionView | null> {
    return this.guarded(async () => {
      const submission = await this.client.submitSolution(
        this.tid,
        problemId,
        payload,
        citedHintIds,
      );
      await this.refresh();
      return submission;
    });
  }

  async attemptEntry(passcode: string) {
    return this.guarded(async () => {
      const result = await this.client.attemptEntry(this.tid, passcode);
      await this.refresh();
      return result;
    });
  }

  /** Entries the citation picker offers: the team's own transcript. */
  citationChoices(): { queryId: string; prompt: string }[] {
    return this.transcript.map((m) => ({ queryId: m.query_id, prompt: m.prompt }));
  }

  /** Claim outcome for a given transcript entry, if any. */
  claimOutcome(queryId: string): string | null {
    const claim = this.claims.find((c) => c.query_id === queryId);
    return claim ? claim.verdict : null;
  }

  /** The whole console as markup; pure function of the fetched state. */
  renderHtml(): string {
    const { made, quota } = this.quotaProgress();
    return [
      renderPhaseBanner(this.view),
      renderNotice(this.notice),
      renderQuotaCounter(made, quota),
      renderTranscript(this.transcript),
      renderClaims(this.claims),
      renderReconFeed(this.view),
      renderFeed(this.view),
      this.scoreboard ? renderScoreboard(this.scoreboard) : "",
    ].join("\n");
  }

  /** Run an action, surfacing server errors as an inline notice. */
  private async guarded<T>(action: () => Promise<T>): Promise<T | null> {
    this.notice = null;
    try {
      return await action();
    } catch (error) {
      if (error instanceof ApiError) {
        this.notice = `${error.code}: ${error.message}`;
        return null;
      }
      throw error;
    }
  }
}
