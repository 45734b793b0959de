/** Pure HTML renderers: (view state, role) -> markup string.
 *
 * Confidentiality is enforced structurally: the team renderer's inputs
 * simply do not carry truth annotations or foreign answers, and the
 * recon projection holds prompts only.  Judges see truth side by side.
 */

import type {
  ClaimView,
  JudgeQueryView,
  PrivateMessage,
  Scoreboard,
  SubmissionView,
} from "./protocol.js";
import { pointsStr } from "./protocol.js";
import type { ReconPrompt, ViewState } from "./viewstate.js";
import { countdownMs, orderedFeed, reconPrompts } from "./viewstate.js";

export function escapeHtml(text: string): string {
  return text
    .replace(/&/g, "&amp;")
    .replace(/</g, "&lt;")
    .replace(/>/g, "&gt;")
    .replace(/"/g, "&quot;");
}

export function renderPhaseBanner(state: ViewState): string {
  const remaining = countdownMs(state);
  const clock =
    remaining === null
      ? ""
      : ` <span class="countdown" data-remaining-ms="${remaining}">${formatCountdown(remaining)}</span>`;
  return `<header class="phase-banner">${escapeHtml(state.phase)}${clock}</header>`;
}

export function formatCountdown(remainingMs: number): string {
  const total = Math.max(0, Math.floor(remainingMs / 1000));
  const minutes = Math.floor(total / 60);
  const seconds = total % 60;
  return `${minutes}:${String(seconds).padStart(2, "0")}`;
}

/** Public feed, strictly in sequence order. */
export function renderFeed(state: ViewState): string {
  const items = orderedFeed(state)
    .map((event) => {
      const body = describeFeedEvent(event.kind, event.payload);
      return `<li class="feed-item" data-sequence="${event.sequence}">${body}</li>`;
    })
    .join("");
  return `<ol class="feed">${items}</ol>`;
}

function describeFeedEvent(kind: string, payload: Record<string, unknown>): string {
  switch (kind) {
    case "ScoreChanged": {
      const team = escapeHtml(String(payload["team_id"]));
      const rule = escapeHtml(String(payload["rule"]));
      const delta = pointsStr(Number(payload["delta_tenths"]));
      const total = pointsStr(Number(payload["total_tenths"]));
      return `score: ${team} ${delta.startsWith("-") ? delta : `+${delta}`} (${rule}) &rarr; ${total}`;
    }
    case "WindowOpened":
      return `recon window opened (${Number(payload["duration_s"])}s)`;
    case "WindowClosed":
      return "recon window closed";
    case "PromptPosted": {
      const name = escapeHtml(String(payload["team_name"]));
      const prompt = escapeHtml(String(payload["prompt"]));
      return `prompt from ${name}: <q>${prompt}</q>`;
    }
    default:
      return escapeHtml(kind);
  }
}

/** Opponents'-prompts panel: prompts stream in, answers never exist here. */
export function renderReconFeed(state: ViewState): string {
  const items = reconPrompts(state)
    .map(
      (p: ReconPrompt) =>
        `<li class="recon-prompt" data-entry="${escapeHtml(p.entryId)}" data-team="${escapeHtml(p.teamId)}">` +
        `<strong>${escapeHtml(p.teamName)}</strong>: <q>${escapeHtml(p.prompt)}</q></li>`,
    )
    .join("");
  return `<ol class="recon-feed">${items}</ol>`;
}

/** The team's private chat: its own prompts and the emitted answers. */
export function renderTranscript(messages: PrivateMessage[]): string {
  const items = messages
    .map(
      (m) =>
        `<li class="chat-entry" data-query="${escapeHtml(m.query_id)}">` +
        `<div class="chat-prompt">${escapeHtml(m.prompt)}</div>` +
        `<div class="chat-answer">${escapeHtml(m.answer)}</div>` +
        `<div class="chat-meta">${escapeHtml(m.mode)} / ${escapeHtml(m.round)}</div></li>`,
    )
    .join("");
  return `<ol class="transcript">${items}</ol>`;
}

export function renderQuotaCounter(queriesMade: number, quota: number): string {
  return `<span class="quota">queries: ${queriesMade}/${quota}</span>`;
}

/** Scoreboard rendered verbatim from server rows; nothing is computed. */
export function renderScoreboard(board: Scoreboard): string {
  const rows = board.rows
    .map(
      (row) =>
        `<tr data-team="${escapeHtml(row.team_id)}"><td>${escapeHtml(row.team_name)}</td>` +
        `<td class="total">${escapeHtml(row.total)}</td>` +
        `<td class="round3">${escapeHtml(row.round3_weighted ?? "")}</td></tr>`,
    )
    .join("");
  return (
    `<table class="scoreboard"><thead><tr><th>team</th><th>total</th><th>round 3</th></tr></thead>` +
    `<tbody>${rows}</tbody></table>`
  );
}

/** Claim list with outcomes as the server reports them. */
export function renderClaims(claims: ClaimView[]): string {
  const items = claims
    .map((c) => {
      const outcome =
        c.verdict === "Pending"
          ? "pending"
          : c.verdict === "Upheld"
            ? "claim upheld"
            : "claim rejected";
      return (
        `<li class="claim" data-claim="${escapeHtml(c.id)}" data-query="${escapeHtml(c.query_id)}">` +
        `${escapeHtml(c.explanation)} &mdash; <em class="claim-outcome">${outcome}</em></li>`
      );
    })
    .join("");
  return `<ol class="claims">${items}</ol>`;
}

/** Judge-only: ledger ground truth next to the emitted answer. */
export function renderLedgerReview(records: JudgeQueryView[]): string {
  const rows = records
    .map(
      (r) =>
        `<tr class="${r.falsified ? "falsified" : "truthful"}" data-query="${escapeHtml(r.id)}">` +
        `<td>${escapeHtml(r.team_id)}</td><td>${escapeHtml(r.kind)}</td>` +
        `<td class="emitted">${escapeHtml(r.emitted_answer)}</td>` +
        `<td class="truth">${escapeHtml(r.ground_truth)}</td>` +
        `<td class="flag">${r.falsified ? "FALSIFIED" : "ok"}</td></tr>`,
    )
    .join("");
  return (
    `<table class="ledger"><thead><tr><th>team</th><th>kind</th>` +
    `<th>emitted</th><th>ground truth</th><th>flag</th></tr></thead><tbody>${rows}</tbody></table>`
  );
}

/** Judge-only: pending submissions with their cited hints. */
export function renderJudgingQueue(pending: SubmissionView[]): string {
  const items = pending
    .map(
      (s) =>
        `<li class="pending-submission" data-submission="${escapeHtml(s.id)}">` +
        `${escapeHtml(s.team_id)} / ${escapeHtml(s.problem_id)}` +
        ` (cites: ${s.cited_hints.map(escapeHtml).join(", ") || "none"})</li>`,
    )
    .join("");
  return `<ol class="judging-queue">${items}</ol>`;
}

export function renderNotice(notice: string | null): string {
  return notice === null
    ? ""
    : `<div class="notice" role="alert">${escapeHtml(notice)}</div>`;
}
