/** The console's view model: a pure fold over server events.
 *
 * Invariants this module maintains:
 *  - rendered feed order is sequence order, regardless of arrival order;
 *  - the countdown is server-anchored: it is derived from the window
 *    deadline and the latest server clock seen, never from a client clock;
 *  - no score is computed here — totals mirror the server's numbers
 *    (`total_tenths` on ScoreChanged events, scoreboard rows on reload).
 */

import type {
  FeedEvent,
  Phase,
  PrivateMessage,
  PromptPostedPayload,
  ScoreChangedPayload,
  WindowOpenedPayload,
} from "./protocol.js";

export interface ReconPrompt {
  sequence: number;
  entryId: string;
  teamId: string;
  teamName: string;
  prompt: string;
}

export interface TeamTotal {
  teamId: string;
  totalTenths: number;
}

export interface ViewState {
  phase: Phase;
  /** latest server clock observed on any event or snapshot */
  serverClockMs: number;
  /** feed events keyed by sequence (sparse until gaps fill) */
  feed: ReadonlyMap<number, FeedEvent>;
  /** recon prompts, derived from PromptPosted events */
  window: { deadlineMs: number; durationS: number; open: boolean } | null;
  /** per-team running totals mirrored from ScoreChanged events */
  totalsTenths: ReadonlyMap<string, number>;
}

export function emptyView(phase: Phase = "Registration", clockMs = 0): ViewState {
  return {
    phase,
    serverClockMs: clockMs,
    feed: new Map(),
    window: null,
    totalsTenths: new Map(),
  };
}

/** Fold one public feed event into the view. Duplicate sequences are ignored. */
export function applyFeed(state: ViewState, event: FeedEvent): ViewState {
  if (state.feed.has(event.sequence)) {
    return state;
  }
  const feed = new Map(state.feed);
  feed.set(event.sequence, event);
  let { window, totalsTenths } = state;
  if (event.kind === "WindowOpened") {
    const p = event.payload as unknown as WindowOpenedPayload;
    window = { deadlineMs: p.deadline_ms, durationS: p.duration_s, open: true };
  } else if (event.kind === "WindowClosed" && window !== null) {
    window = { ...window, open: false };
  } else if (event.kind === "ScoreChanged") {
    const p = event.payload as unknown as ScoreChangedPayload;
    const totals = new Map(totalsTenths);
    totals.set(p.team_id, p.total_tenths);
    totalsTenths = totals;
  }
  return {
    ...state,
    serverClockMs: Math.max(state.serverClockMs, event.clock_ms),
    feed,
    window,
    totalsTenths,
  };
}

export function applyPhase(state: ViewState, phase: Phase): ViewState {
  return { ...state, phase };
}

export function anchorClock(state: ViewState, serverClockMs: number): ViewState {
  return { ...state, serverClockMs: Math.max(state.serverClockMs, serverClockMs) };
}

/** All events in sequence order — the only order the UI ever renders. */
export function orderedFeed(state: ViewState): FeedEvent[] {
  return [...state.feed.values()].sort((a, b) => a.sequence - b.sequence);
}

/** Opponents'-prompts projection of the feed (no answer content exists here). */
export function reconPrompts(state: ViewState): ReconPrompt[] {
  return orderedFeed(state)
    .filter((e) => e.kind === "PromptPosted")
    .map((e) => {
      const p = e.payload as unknown as PromptPostedPayload;
      return {
        sequence: e.sequence,
        entryId: p.entry_id,
        teamId: p.team_id,
        teamName: p.team_name,
        prompt: p.prompt,
      };
    });
}

/** Server-anchored countdown: remaining window time at the latest server clock.
 * Returns null when no window has opened; 0 once closed or expired.
 */
export function countdownMs(state: ViewState): number | null {
  if (state.window === null) {
    return null;
  }
  if (!state.window.open) {
    return 0;
  }
  return Math.max(0, state.window.deadlineMs - state.serverClockMs);
}

/** Reconstruct a view from scratch — what a page reload does with feed?from=0. */
export function reconstruct(
  events: Iterable<FeedEvent>,
  phase: Phase,
  clockMs = 0,
): ViewState {
  let state = emptyView(phase, clockMs);
  for (const event of events) {
    state = applyFeed(state, event);
  }
  return state;
}

/** Deep value-equality of two views (maps compared by content). */
export function sameView(a: ViewState, b: ViewState): boolean {
  if (a.phase !== b.phase || a.serverClockMs !== b.serverClockMs) {
    return false;
  }
  if (JSON.stringify(a.window) !== JSON.stringify(b.window)) {
    return false;
  }
  const feedA = orderedFeed(a);
  const feedB = orderedFeed(b);
  if (JSON.stringify(feedA) !== JSON.stringify(feedB)) {
    return false;
  }
  const totalsA = [...a.totalsTenths.entries()].sort();
  const totalsB = [...b.totalsTenths.entries()].sort();
  return JSON.stringify(totalsA) === JSON.stringify(totalsB);
}

/** Contiguous transcript in team_seq order; out-of-order arrival tolerated. */
export function orderedTranscript(messages: Iterable<PrivateMessage>): PrivateMessage[] {
  const bySeq = new Map<number, PrivateMessage>();
  for (const m of messages) {
    if (!bySeq.has(m.team_seq)) {
      bySeq.set(m.team_seq, m);
    }
  }
  return [...bySeq.values()].sort((a, b) => a.team_seq - b.team_seq);
}
