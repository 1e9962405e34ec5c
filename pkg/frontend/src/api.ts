/**
 * Typed client for the storyloom HTTP API. This module is the only place the
 * frontend touches the network; every panel goes through it.
 */

export interface SentenceJson {
  sentence_id: string;
  content: string;
  author: string;
  created_at: number;
  view_ids: string[];
  timeline_node_id: number | null;
  revision: number;
}

export interface ViewJson {
  view_id: string;
  title: string;
  caption: string;
  chart_kind: string;
  grammar_spec: GrammarSpec;
}

export interface DashboardJson {
  dashboard_id: string;
  views: ViewJson[];
  layout: { rows: number; cols: number; cells: unknown[] };
}

export type ShowViewResult = ViewJson | DashboardJson;

export interface GrammarSpec {
  $schema?: string;
  title?: string;
  mark: { type: string; [k: string]: unknown } | string;
  data: { values: Record<string, unknown>[] };
  encoding?: Record<string, { field?: string; type?: string }>;
}

export interface DriftRecord {
  drift_types: string[];
  severity: "none" | "minor" | "moderate" | "critical";
  dimensions: Record<string, string>;
}

export interface TimelineNodeJson {
  node_id: number;
  sentence_id: string;
  sentence_content: string;
  changed_from_previous: DriftRecord | null;
  related_source: { related_categories: string[]; related_columns: string[] };
  related_sentence: { node_id: number; reason: string } | null;
  parent_node_id: number | null;
  branch_id: string;
  view_ids: string[];
}

export interface IssueJson {
  qid: string;
  title: string;
  status: "open" | "resolved" | "stalled";
  sentenceRefs: string[];
  links?: { qid: string; type: string; explanation: string }[];
}

export type InquiryBoardJson = Record<string, IssueJson[]>;

export interface StoryPointJson {
  data_story_sentence: string;
  ref_id: string | string[];
}

export interface SnapshotJson {
  session_id: string;
  tree: {
    nodes: Record<string, unknown>[];
    root_id: string | null;
    cursor_id: string | null;
    branch_of: Record<string, string>;
    current_branch: string;
  };
  active_path: SentenceJson[];
  views: Record<string, ViewJson>;
  links: Record<string, string[]>;
  timeline: TimelineNodeJson[];
  inquiry: InquiryBoardJson;
  datasets: unknown[];
  event_log: unknown[];
}

export interface InteractionEventWire {
  elementId: string;
  elementName: string;
  elementType: string;
  action: "hover" | "click";
  dashboardConfig: Record<string, unknown>;
  chartData: unknown;
  timestamp: number;
}

export interface CaptureSuggestionWire {
  narrative_suggestion: string | null;
  source_elementId: string;
  source_view_title: string;
  explanation: string;
}

export interface ApiError {
  status: number;
  code: string;
  message: string;
  violations?: string[];
}

export function isDashboard(v: ShowViewResult): v is DashboardJson {
  return (v as DashboardJson).views !== undefined;
}

async function parseError(res: Response): Promise<ApiError> {
  let body: { code?: string; message?: string; violations?: string[] } = {};
  try {
    body = await res.json();
  } catch {
    /* non-JSON error body */
  }
  return {
    status: res.status,
    code: body.code ?? `HTTP${res.status}`,
    message: body.message ?? res.statusText,
    violations: body.violations,
  };
}

export class StoryloomClient {
  constructor(
    readonly baseUrl: string,
    private fetchImpl: typeof fetch = fetch,
  ) {}

  private async request<T>(
    method: string,
    path: string,
    body?: unknown,
  ): Promise<T> {
    const init: RequestInit = { method, headers: {} };
    if (body !== undefined) {
      init.headers = { "content-type": "application/json" };
      init.body = JSON.stringify(body);
    }
    const res = await this.fetchImpl(`${this.baseUrl}${path}`, init);
    if (!res.ok) {
      throw await parseError(res);
    }
    return (await res.json()) as T;
  }

  createSession(): Promise<{ session_id: string }> {
    return this.request("POST", "/sessions");
  }

  ingestDataset(
    sid: string,
    payload: { name: string; csv_text: string; category_tags?: string[] },
  ): Promise<unknown> {
    return this.request("POST", `/sessions/${sid}/datasets`, payload);
  }

  appendSentence(
    sid: string,
    content: string,
    mode?: "fallback",
  ): Promise<SentenceJson> {
    const qs = mode ? `?mode=${mode}` : "";
    return this.request("POST", `/sessions/${sid}/sentences${qs}`, { content });
  }

  insertSentence(
    sid: string,
    anchorId: string,
    content: string,
    mode?: "fallback",
  ): Promise<SentenceJson> {
    const qs = mode ? `?mode=${mode}` : "";
    return this.request(
      "POST",
      `/sessions/${sid}/sentences/${anchorId}/insert${qs}`,
      { content },
    );
  }

  updateSentence(
    sid: string,
    sentenceId: string,
    content: string,
    mode?: "fallback",
  ): Promise<SentenceJson> {
    const qs = mode ? `?mode=${mode}` : "";
    return this.request(
      "PATCH",
      `/sessions/${sid}/sentences/${sentenceId}${qs}`,
      { content },
    );
  }

  deleteSentence(
    sid: string,
    sentenceId: string,
  ): Promise<{ deleted: string }> {
    return this.request("DELETE", `/sessions/${sid}/sentences/${sentenceId}`);
  }

  createBranch(
    sid: string,
    sentenceId: string,
  ): Promise<{ branch_id: string; fork_point: string }> {
    return this.request(
      "POST",
      `/sessions/${sid}/sentences/${sentenceId}/branch`,
    );
  }

  deleteBranch(sid: string, forkChild: string): Promise<unknown> {
    return this.request("DELETE", `/sessions/${sid}/branches/${forkChild}`);
  }

  showView(
    sid: string,
    sentenceId: string,
    mode?: "fallback",
  ): Promise<ShowViewResult> {
    const qs = mode ? `?mode=${mode}` : "";
    return this.request(
      "POST",
      `/sessions/${sid}/sentences/${sentenceId}/show_view${qs}`,
    );
  }

  recordEvent(
    sid: string,
    event: InteractionEventWire,
  ): Promise<{ recorded: number }> {
    return this.request("POST", `/sessions/${sid}/events`, event);
  }

  capture(sid: string, mode?: "fallback"): Promise<CaptureSuggestionWire> {
    const qs = mode ? `?mode=${mode}` : "";
    return this.request("POST", `/sessions/${sid}/capture${qs}`);
  }

  acceptCapture(
    sid: string,
    suggestion: CaptureSuggestionWire,
    mode?: "fallback",
  ): Promise<SentenceJson> {
    const qs = mode ? `?mode=${mode}` : "";
    return this.request(
      "POST",
      `/sessions/${sid}/capture/accept${qs}`,
      suggestion,
    );
  }

  timeline(sid: string): Promise<TimelineNodeJson[]> {
    return this.request("GET", `/sessions/${sid}/timeline`);
  }

  restore(
    sid: string,
    nodeId: number,
  ): Promise<{ node_id: number; sentences: unknown[] }> {
    return this.request("POST", `/sessions/${sid}/timeline/${nodeId}/restore`);
  }

  reflections(sid: string, nodeId: number): Promise<unknown[]> {
    return this.request(
      "GET",
      `/sessions/${sid}/timeline/${nodeId}/reflections`,
    );
  }

  inquiry(sid: string, status?: string): Promise<InquiryBoardJson> {
    const qs = status ? `?status=${status}` : "";
    return this.request("GET", `/sessions/${sid}/inquiry${qs}`);
  }

  story(sid: string): Promise<StoryPointJson[]> {
    return this.request("GET", `/sessions/${sid}/story`);
  }

  snapshot(sid: string): Promise<SnapshotJson> {
    return this.request("GET", `/sessions/${sid}/snapshot`);
  }
}
