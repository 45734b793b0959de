/** The judge console: verdicts with per-hint marks in one action, claim
 * review against the truth ledger, and the Round-3 interaction rubric.
 *
 * The console never computes a score.  Every number it shows originates
 * from server events or the server scoreboard.
 */

import { ApiError, ArenaClient } from "./client.js";
import type {
  ClaimView,
  HintMark,
  JudgeQueryView,
  Scoreboard,
  StateSnapshot,
  SubmissionView,
  Verdict,
} from "./protocol.js";
import {
  renderFeed,
  renderJudgingQueue,
  renderLedgerReview,
  renderNotice,
  renderPhaseBanner,
  renderScoreboard,
} from "./render.js";
import {
  anchorClock,
  applyFeed,
  applyPhase,
  emptyView,
  type ViewState,
} from "./viewstate.js";

export interface ClaimReviewRow {
  claim: ClaimView;
  record: JudgeQueryView | undefined;
}

export class JudgeConsole {
  readonly client: ArenaClient;
  readonly tid: string;

  view: ViewState = emptyView();
  ledger: JudgeQueryView[] = [];
  claims: ClaimView[] = [];
  pending: SubmissionView[] = [];
  scoreboard: Scoreboard | null = null;
  snapshot: StateSnapshot | null = null;
  /** conflict banner text after e.g. a double verdict; null when clear */
  conflict: string | null = null;

  private feedNext = 0;

  constructor(client: ArenaClient, tid: string) {
    this.client = client;
    this.tid = tid;
  }

  async load(): Promise<void> {
    this.view = emptyView();
    this.feedNext = 0;
    await this.refresh();
  }

  async refresh(): Promise<void> {
    const snapshot = await this.client.state(this.tid);
    this.snapshot = snapshot;
    this.view = applyPhase(this.view, snapshot.phase);
    this.view = anchorClock(this.view, snapshot.clock_ms);
    this.pending = snapshot.pending_judgements ?? [];

    const feed = await this.client.feed(this.tid, this.feedNext);
    for (const event of feed.events) {
      this.view = applyFeed(this.view, event);
    }
    this.feedNext = feed.next;

    this.ledger = (await this.client.listQueries<JudgeQueryView>(this.tid)).queries;
    this.claims = (await this.client.listClaims(this.tid)).claims;
    this.scoreboard = await this.client.scoreboard(this.tid);
  }

  /** Verdict and all per-hint marks submitted as one action. */
  async judge(
    submissionId: string,
    verdict: Verdict,
    hintMarks: Record<string, HintMark> = {},
  ): Promise<SubmissionView | null> {
    this.conflict = null;
    try {
      const judged = await this.client.judgeSubmission(this.tid, submissionId, verdict, hintMarks);
      await this.refresh();
      return judged;
    } catch (error) {
      if (error instanceof ApiError && error.status === 409) {
        this.conflict = `${error.code}: ${error.message}`;
        await this.refresh();
        return null;
      }
      throw error;
    }
  }

  async adjudicate(claimId: string): Promise<ClaimView | null> {
    this.conflict = null;
    try {
      const claim = await this.client.adjudicateClaim(this.tid, claimId);
      await this.refresh();
      return claim;
    } catch (error) {
      if (error instanceof ApiError && error.status === 409) {
        this.conflict = `${error.code}: ${error.message}`;
        await this.refresh();
        return null;
      }
      throw error;
    }
  }

  /** Round-3 interaction rubric, 0-100 as judged. */
  async setRubric(teamId: string, points: number) {
    this.conflict = null;
    try {
      const event = await this.client.recordPresentation(this.tid, teamId, points);
      await this.refresh();
      return event;
    } catch (error) {
      if (error instanceof ApiError && error.status === 409) {
        this.conflict = `${error.code}: ${error.message}`;
        await this.refresh();
        return null;
      }
      throw error;
    }
  }

  /** Claims paired with the ledger record they accuse, truth included. */
  claimReview(): ClaimReviewRow[] {
    const byId = new Map(this.ledger.map((r) => [r.id, r]));
    return this.claims.map((claim) => ({
      claim,
      record: byId.get(claim.query_id),
    }));
  }

  /** Round-3 blended total for a team, verbatim from the server scoreboard. */
  displayedRound3Total(teamId: string): string | null {
    const row = this.scoreboard?.rows.find((r) => r.team_id === teamId);
    return row ? row.round3_weighted : null;
  }

  renderHtml(): string {
    return [
      renderPhaseBanner(this.view),
      renderNotice(this.conflict),
      renderJudgingQueue(this.pending),
      renderLedgerReview(this.ledger),
      renderFeed(this.view),
      this.scoreboard ? renderScoreboard(this.scoreboard) : "",
    ].join("\n");
  }
}
