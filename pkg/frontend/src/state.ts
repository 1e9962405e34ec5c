/**
 * Application state with 1s snapshot polling. Panels subscribe and re-render
 * when the snapshot hash changes, so a quiet backend costs no DOM work.
 */

import type {
  ShowViewResult,
  SnapshotJson,
  StoryloomClient,
  StoryPointJson,
} from "./api";

export type ViewMode = "linear" | "tree";

export interface AppState {
  sessionId: string | null;
  snapshot: SnapshotJson | null;
  currentView: ShowViewResult | null;
  story: StoryPointJson[] | null;
  storyError: string | null;
  viewMode: ViewMode;
  selectedSentenceId: string | null;
  statusLine: string;
}

export type Listener = (state: AppState) => void;

export const POLL_INTERVAL_MS = 1000;

/** Stable fingerprint used to skip redundant re-renders between polls. */
export function snapshotFingerprint(snap: SnapshotJson): string {
  return JSON.stringify({
    path: snap.active_path.map((s) => [s.sentence_id, s.revision]),
    tree: snap.tree.cursor_id,
    branch: snap.tree.current_branch,
    timeline: snap.timeline.length,
    views: Object.keys(snap.views).length,
    inquiry: Object.entries(snap.inquiry).map(([k, v]) => [k, v.length]),
  });
}

export class Store {
  state: AppState = {
    sessionId: null,
    snapshot: null,
    currentView: null,
    story: null,
    storyError: null,
    viewMode: "linear",
    selectedSentenceId: null,
    statusLine: "",
  };

  private listeners: Listener[] = [];
  private lastFingerprint = "";
  private timer: ReturnType<typeof setInterval> | null = null;

  constructor(readonly client: StoryloomClient) {}

  subscribe(listener: Listener): () => void {
    this.listeners.push(listener);
    return () => {
      this.listeners = this.listeners.filter((l) => l !== listener);
    };
  }

  update(patch: Partial<AppState>): void {
    this.state = { ...this.state, ...patch };
    for (const listener of this.listeners) {
      listener(this.state);
    }
  }

  async refresh(): Promise<boolean> {
    if (!this.state.sessionId) {
      return false;
    }
    const snap = await this.client.snapshot(this.state.sessionId);
    const fingerprint = snapshotFingerprint(snap);
    if (fingerprint === this.lastFingerprint) {
      return false;
    }
    this.lastFingerprint = fingerprint;
    this.update({ snapshot: snap });
    return true;
  }

  startPolling(intervalMs: number = POLL_INTERVAL_MS): void {
    this.stopPolling();
    this.timer = setInterval(() => {
      void this.refresh().catch(() => {
        this.update({ statusLine: "connection lost, retrying" });
      });
    }, intervalMs);
  }

  stopPolling(): void {
    if (this.timer !== null) {
      clearInterval(this.timer);
      this.timer = null;
    }
  }
}

/** Human badge text for a drift record shown on the timeline canvas. */
export function driftBadge(
  drift: { drift_types: string[]; severity: string } | null,
): string {
  if (drift === null) {
    return "start";
  }
  return `${drift.drift_types.join("+")} (${drift.severity})`;
}

export const DRIFT_COLORS: Record<string, string> = {
  none: "#8a8f98",
  minor: "#3f8efc",
  moderate: "#f0a202",
  critical: "#d7263d",
};

export function severityColor(severity: string): string {
  return DRIFT_COLORS[severity] ?? DRIFT_COLORS.none;
}
