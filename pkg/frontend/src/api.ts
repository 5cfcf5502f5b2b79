/**
 * Typed client for the pmchat HTTP API.
 *
 * Every figure shown in the UI comes verbatim from these response payloads;
 * the client never recomputes KPIs or percentages.
 */

export interface ErrorEnvelope {
  code: string;
  message: string;
  details: Record<string, unknown>;
}

export class ApiError extends Error {
  constructor(
    public readonly status: number,
    public readonly envelope: ErrorEnvelope,
  ) {
    super(`${envelope.code}: ${envelope.message}`);
  }
}

export interface CleaningReport {
  input_rows: number;
  surviving_events: number;
  dropped: Record<string, number>;
}

export interface IngestResponse {
  log_id: string;
  cached: boolean;
  cleaning_report: CleaningReport;
}

export interface StructuralKpis {
  log_id: string;
  total_cases: number;
  total_activities: number;
  total_variants: number;
  total_cases_with_rework: number;
}

export interface TemporalKpis {
  log_id: string;
  first_event_date: string;
  last_event_date: string;
  span_seconds: number;
}

export interface DfgEdge {
  from: string;
  to: string;
  frequency: number;
}

export interface DfgPayload {
  log_id: string;
  activity_frequencies: Record<string, number>;
  edges: DfgEdge[];
  start_activities: Record<string, number>;
  end_activities: Record<string, number>;
}

export interface VariantRow {
  sequence: string[];
  frequency: number;
  example_case_id: string;
}

export interface BottleneckRow {
  from: string;
  to: string;
  mean_waiting: number;
  frequency: number;
}

export interface PerformancePayload {
  log_id: string;
  case_duration: { count: number; min: number; max: number; mean: number; median: number };
  bottlenecks: BottleneckRow[];
}

export interface HandoverPayload {
  log_id: string;
  resources: string[];
  edges: { from: string; to: string; count: number }[];
}

export interface ChatMessage {
  role: "system" | "user" | "assistant";
  content: string;
}

export interface AnalysisResult {
  session_id: string;
  module: string;
  task: string;
  prompt_text: string;
  response: string | null;
  not_available: boolean;
  attempts: number;
  latency_seconds: number;
}

export interface SessionHistory {
  session_id: string;
  log_id: string;
  prompt_style: string;
  messages: ChatMessage[];
  analyses: AnalysisResult[];
}

export interface GroupDistribution {
  total: number;
  counts: Record<string, number>;
  percentages: Record<string, number>;
}

export interface DistributionReport {
  group_by: string;
  groups: Record<string, GroupDistribution>;
}

export type EngineModule = "dashboard" | "discovery" | "performance" | "conformance" | "orgmining";
export type AnalysisTask = "Analytics" | "Interpretation" | "Recommendations";
export type PromptStyle = "zero_shot" | "optimized";

async function unwrap<T>(response: Response): Promise<T> {
  if (response.ok) {
    return (await response.json()) as T;
  }
  let envelope: ErrorEnvelope;
  try {
    envelope = (await response.json()) as ErrorEnvelope;
  } catch {
    envelope = { code: "http_error", message: response.statusText, details: {} };
  }
  throw new ApiError(response.status, envelope);
}

export class PmchatClient {
  constructor(private readonly baseUrl: string = "") {}

  private url(path: string): string {
    return `${this.baseUrl}${path}`;
  }

  private async post<T>(path: string, body: unknown): Promise<T> {
    const response = await fetch(this.url(path), {
      method: "POST",
      headers: { "Content-Type": "application/json" },
      body: JSON.stringify(body),
    });
    return unwrap<T>(response);
  }

  private async get<T>(path: string): Promise<T> {
    return unwrap<T>(await fetch(this.url(path)));
  }

  async ingestLog(
    file: Blob,
    fileName: string,
    mapping: Record<string, string | null>,
    metadata: Record<string, string>,
  ): Promise<IngestResponse> {
    const form = new FormData();
    form.append("file", file, fileName);
    form.append("mapping", JSON.stringify(mapping));
    form.append("metadata", JSON.stringify(metadata));
    const response = await fetch(this.url("/logs"), { method: "POST", body: form });
    return unwrap<IngestResponse>(response);
  }

  analyze(logId: string, module: EngineModule | "all") {
    return this.post<{ log_id: string; results: { module: string; version: number; cached: boolean }[] }>(
      `/logs/${logId}/analyze`,
      { module },
    );
  }

  structural(logId: string) {
    return this.get<StructuralKpis>(`/logs/${logId}/kpis/structural`);
  }

  temporal(logId: string) {
    return this.get<TemporalKpis>(`/logs/${logId}/kpis/temporal`);
  }

  dfg(logId: string) {
    return this.get<DfgPayload>(`/logs/${logId}/dfg`);
  }

  variants(logId: string) {
    return this.get<{ log_id: string; variants: VariantRow[] }>(`/logs/${logId}/variants`);
  }

  performance(logId: string) {
    return this.get<PerformancePayload>(`/logs/${logId}/performance`);
  }

  handover(logId: string) {
    return this.get<HandoverPayload>(`/logs/${logId}/handover`);
  }

  createSession(logId: string, style: PromptStyle) {
    return this.post<SessionHistory>("/sessions", { log_id: logId, style });
  }

  runAnalysis(sessionId: string, module: EngineModule, task: AnalysisTask) {
    return this.post<AnalysisResult>(`/sessions/${sessionId}/analysis`, { module, task });
  }

  sendMessage(sessionId: string, text: string) {
    return this.post<{ session_id: string; reply: ChatMessage }>(
      `/sessions/${sessionId}/message`,
      { text },
    );
  }

  history(sessionId: string) {
    return this.get<SessionHistory>(`/sessions/${sessionId}/history`);
  }

  postRating(rating: {
    category: string;
    sector?: string;
    gender?: string;
    style?: string;
    module?: string;
    session_id?: string;
  }) {
    return this.post<{ rating_id: string }>("/ratings", rating);
  }

  ratingsDistribution(groupBy: string) {
    return this.get<DistributionReport>(`/ratings/distribution?group_by=${encodeURIComponent(groupBy)}`);
  }

  health() {
    return this.get<{ status: string; kernel_backend: string }>("/healthz");
  }
}
