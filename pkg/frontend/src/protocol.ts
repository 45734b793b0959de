/** Wire types for the arena server's HTTP protocol (see ../docs/protocol.md). */

export type Phase =
  | "Registration"
  | "Round1"
  | "Round2"
  | "Round3Recon"
  | "Round3Solve"
  | "Round3Presentation"
  | "Finished";

export type Role = "admin" | "judge" | "team" | "spectator";

export type QueryMode = "Advisor" | "Calculator";

export type Verdict = "Pending" | "Correct" | "Partial" | "Incorrect";

export type HintMark = "UsedCorrectly" | "Misled" | "Neutral";

export type ClaimVerdict = "Pending" | "Upheld" | "Rejected";

/** One public feed event; sequences are gapless from 0. */
export interface FeedEvent {
  sequence: number;
  kind: "ScoreChanged" | "WindowOpened" | "WindowClosed" | "PromptPosted";
  clock_ms: number;
  payload: Record<string, unknown>;
}

export interface ScoreChangedPayload {
  team_id: string;
  rule: string;
  delta_tenths: number;
  total_tenths: number;
}

export interface WindowOpenedPayload {
  opened_at_ms: number;
  duration_s: number;
  deadline_ms: number;
}

export interface PromptPostedPayload {
  entry_id: string;
  team_id: string;
  team_name: string;
  prompt: string;
}

/** One entry of a team's confidential AI transcript. */
export interface PrivateMessage {
  team_seq: number;
  query_id: string;
  round: string;
  mode: string;
  kind: string;
  prompt: string;
  answer: string;
  clock_ms: number;
}

/** A query as the owning team sees it: no truth annotations. */
export interface TeamQueryView {
  id: string;
  round: string;
  mode: QueryMode;
  kind: string;
  prompt: string;
  answer: string;
  timestamp_ms: number;
}

/** A query as judges see it: truth included. */
export interface JudgeQueryView extends TeamQueryView {
  team_id: string;
  ground_truth: string;
  emitted_answer: string;
  falsified: boolean;
  flaw_kind: string | null;
  flaw_note: string | null;
}

export interface TeamPublicView {
  id: string;
  name: string;
  active: boolean;
  admitted: boolean;
  pieces: string[];
}

export interface SubmissionView {
  id: string;
  team_id: string;
  problem_id: string;
  round: string;
  payload: string;
  cited_hints: string[];
  filed_ms: number;
  verdict: Verdict;
  hint_marks: Record<string, HintMark>;
}

export interface ClaimView {
  id: string;
  team_id: string;
  query_id: string;
  explanation: string;
  verdict: ClaimVerdict;
  filed_ms: number;
}

export interface ScoreboardRow {
  team_id: string;
  team_name: string;
  total_tenths: number;
  total: string;
  rules: Record<string, number>;
  /** weighted round-3 blend as a server-formatted string; null until a
   * presentation score exists */
  round3_weighted: string | null;
}

export interface Scoreboard {
  tournament_id: string;
  phase: Phase;
  rows: ScoreboardRow[];
}

export interface WindowSnapshot {
  opened_at_ms: number;
  duration_s: number;
  deadline_ms: number;
  state: "Open" | "Closed";
  closed_at_ms: number | null;
}

export interface PublicRules {
  quota_min_queries: number;
  quota_penalty_per_missing: string;
  recon_duration_s: number;
  ai_interaction_weight: string;
  puzzle_piece_count: number;
  max_entry_attempts: number;
  recon_mode: QueryMode;
  round1_counts_toward_total: boolean;
  round3_max_solution_points: string;
  simulated_clock: boolean;
}

export interface StateSnapshot {
  tournament_id: string;
  phase: Phase;
  clock_ms: number;
  teams: TeamPublicView[];
  window: WindowSnapshot | null;
  feed_next: number;
  rules: PublicRules;
  /** present for team tokens */
  you?: TeamPublicView & {
    entry_attempts_used: number;
    round2_query_count: number;
    private_next: number;
  };
  /** present for judge/admin tokens */
  pending_judgements?: SubmissionView[];
  pending_claims?: ClaimView[];
}

export interface ApiErrorBody {
  error: { code: string; message: string };
}

/** Frames of the live NDJSON channel. */
export type ChannelFrame =
  | { type: "hello"; tournament_id: string; phase: Phase; role: Role; team_id: string | null }
  | { type: "feed"; event: FeedEvent }
  | { type: "private"; message: PrivateMessage }
  | { type: "ping" }
  | { type: "overflow" };

/** The server's fixed scoring schedule, in integer tenths of a point. */
export const SCHEDULE_TENTHS: ReadonlyArray<readonly [string, number]> = [
  ["CorrectSolution", 50],
  ["PartialSolution", 20],
  ["DeceptionDetected", 20],
  ["FalseHintUsed", -10],
  ["CorrectHintUse", 5],
];

/** Render integer tenths as a decimal points string ("-25" -> "-2.5"). */
export function pointsStr(tenths: number): string {
  const sign = tenths < 0 ? "-" : "";
  const abs = Math.abs(tenths);
  const whole = Math.floor(abs / 10);
  const frac = abs % 10;
  return frac === 0 ? `${sign}${whole}` : `${sign}${whole}.${frac}`;
}
