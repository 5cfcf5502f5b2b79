/**
 * pmchat web client: upload a log, inspect KPIs and the DFG, run module
 * analyses in a chat session, and record or review expert ratings.
 *
 * All state that matters lives on the server; the page can be refreshed at
 * any time and rebuilds itself from the API.
 */

import {
  AnalysisTask,
  ApiError,
  EngineModule,
  PmchatClient,
  PromptStyle,
} from "./api.js";
import {
  bottlenecksTable,
  dfgGraph,
  kpiCards,
  ratingBars,
  sessionView,
  variantsTable,
  GraphView,
  SessionView,
  TableView,
} from "./views.js";

const client = new PmchatClient("");

const MODULES: EngineModule[] = ["dashboard", "discovery", "performance", "conformance", "orgmining"];
const TASKS: AnalysisTask[] = ["Analytics", "Interpretation", "Recommendations"];

interface AppState {
  logId: string | null;
  sessionId: string | null;
  style: PromptStyle;
  pending: boolean;
  pollTimer: number | null;
}

const state: AppState = {
  logId: null,
  sessionId: null,
  style: "optimized",
  pending: false,
  pollTimer: null,
};

function $(id: string): HTMLElement {
  const node = document.getElementById(id);
  if (!node) throw new Error(`missing element #${id}`);
  return node;
}

function el<K extends keyof HTMLElementTagNameMap>(
  tag: K,
  className?: string,
  text?: string,
): HTMLElementTagNameMap[K] {
  const node = document.createElement(tag);
  if (className) node.className = className;
  if (text !== undefined) node.textContent = text;
  return node;
}

function banner(message: string, kind: "error" | "info" = "error"): void {
  const box = $("banner");
  box.textContent = message;
  box.className = `banner ${kind}`;
  box.hidden = false;
  window.setTimeout(() => {
    box.hidden = true;
  }, 6000);
}

function describeError(error: unknown): string {
  if (error instanceof ApiError) {
    return `${error.envelope.code}: ${error.envelope.message}`;
  }
  return String(error);
}

function renderTable(target: HTMLElement, view: TableView): void {
  target.replaceChildren();
  const table = el("table");
  const head = el("tr");
  for (const header of view.headers) head.appendChild(el("th", "", header));
  table.appendChild(head);
  for (const row of view.rows) {
    const tr = el("tr");
    for (const cell of row) tr.appendChild(el("td", "", String(cell)));
    table.appendChild(tr);
  }
  target.appendChild(table);
}

function renderGraph(target: HTMLElement, view: GraphView): void {
  const svgNs = "http://www.w3.org/2000/svg";
  target.replaceChildren();
  const svg = document.createElementNS(svgNs, "svg");
  svg.setAttribute("viewBox", `0 0 ${view.width} ${view.height}`);
  svg.setAttribute("class", "dfg");
  const byId = new Map(view.nodes.map((node) => [node.id, node]));
  for (const edge of view.edges) {
    const from = byId.get(edge.from);
    const to = byId.get(edge.to);
    if (!from || !to) continue;
    const line = document.createElementNS(svgNs, "line");
    line.setAttribute("x1", String(from.x));
    line.setAttribute("y1", String(from.y));
    line.setAttribute("x2", String(to.x));
    line.setAttribute("y2", String(to.y));
    line.setAttribute("stroke-width", edge.thickness.toFixed(1));
    line.setAttribute("class", "dfg-edge");
    const title = document.createElementNS(svgNs, "title");
    title.textContent = `${edge.from} → ${edge.to}: ${edge.weight}`;
    line.appendChild(title);
    svg.appendChild(line);
  }
  for (const node of view.nodes) {
    const group = document.createElementNS(svgNs, "g");
    const circle = document.createElementNS(svgNs, "circle");
    circle.setAttribute("cx", String(node.x));
    circle.setAttribute("cy", String(node.y));
    circle.setAttribute("r", "22");
    circle.setAttribute("class", "dfg-node");
    const label = document.createElementNS(svgNs, "text");
    label.setAttribute("x", String(node.x));
    label.setAttribute("y", String(node.y - 30));
    label.setAttribute("text-anchor", "middle");
    label.textContent = node.label;
    group.appendChild(circle);
    group.appendChild(label);
    svg.appendChild(group);
  }
  target.appendChild(svg);
}

async function refreshDashboard(logId: string): Promise<void> {
  const [structural, temporal, variants, performance, dfg] = await Promise.all([
    client.structural(logId),
    client.temporal(logId),
    client.variants(logId),
    client.performance(logId),
    client.dfg(logId),
  ]);
  const cardsBox = $("kpi-cards");
  cardsBox.replaceChildren();
  for (const card of kpiCards(structural, temporal)) {
    const div = el("div", "card");
    div.appendChild(el("div", "card-value", String(card.value)));
    div.appendChild(el("div", "card-label", card.label));
    cardsBox.appendChild(div);
  }
  renderTable($("variants-table"), variantsTable(variants.variants));
  renderTable($("bottlenecks-table"), bottlenecksTable(performance.bottlenecks));
  renderGraph($("dfg-box"), dfgGraph(dfg));
  $("dashboard").hidden = false;
  $("chat-setup").hidden = false;
}

async function handleUpload(event: Event): Promise<void> {
  event.preventDefault();
  const fileInput = $("csv-file") as HTMLInputElement;
  const file = fileInput.files?.[0];
  if (!file) {
    banner("choose a CSV file first");
    return;
  }
  const mapping = {
    case_id: ($("map-case") as HTMLInputElement).value,
    activity: ($("map-activity") as HTMLInputElement).value,
    timestamp: ($("map-timestamp") as HTMLInputElement).value,
    resource: ($("map-resource") as HTMLInputElement).value || null,
  };
  const metadata = {
    sector: ($("meta-sector") as HTMLInputElement).value || "unknown",
    economic_activity: ($("meta-economic") as HTMLInputElement).value || "unknown",
    process_name: ($("meta-process") as HTMLInputElement).value || "unknown",
    organization: ($("meta-org") as HTMLInputElement).value || "unknown",
  };
  try {
    const ingest = await client.ingestLog(file, file.name, mapping, metadata);
    state.logId = ingest.log_id;
    $("log-id").textContent = ingest.cached
      ? `${ingest.log_id} (already ingested; cached)`
      : ingest.log_id;
    banner(
      `ingested ${ingest.cleaning_report.surviving_events} events` +
        (ingest.cached ? " (cache hit)" : ""),
      "info",
    );
    await client.analyze(ingest.log_id, "all");
    await refreshDashboard(ingest.log_id);
  } catch (error) {
    banner(describeError(error));
  }
}

function renderSession(view: SessionView): void {
  const messages = $("messages");
  messages.replaceChildren();
  for (const entry of view.entries) {
    if (entry.role === "system") continue;
    const bubble = el("div", `msg ${entry.role}${entry.notAvailable ? " na" : ""}`);
    if (entry.notAvailable) {
      bubble.appendChild(el("span", "na-chip", "N.A."));
    }
    bubble.appendChild(el("div", "msg-body", entry.content));
    messages.appendChild(bubble);
  }
  messages.scrollTop = messages.scrollHeight;
  const prompts = $("prompt-audit");
  prompts.replaceChildren();
  view.auditedPrompts.forEach((prompt, index) => {
    const details = el("details");
    details.appendChild(el("summary", "", `view prompt #${index + 1}`));
    const pre = el("pre");
    pre.textContent = prompt;
    details.appendChild(pre);
    prompts.appendChild(details);
  });
  ($("send-btn") as HTMLButtonElement).disabled = view.pending || !state.sessionId;
  ($("run-btn") as HTMLButtonElement).disabled = view.pending || !state.sessionId;
}

async function refreshSession(): Promise<void> {
  if (!state.sessionId) return;
  const history = await client.history(state.sessionId);
  renderSession(sessionView(history, state.pending));
}

function setPending(pending: boolean): void {
  state.pending = pending;
  if (pending && state.pollTimer === null) {
    state.pollTimer = window.setInterval(() => {
      refreshSession().catch(() => undefined);
    }, 1000);
  }
  if (!pending && state.pollTimer !== null) {
    window.clearInterval(state.pollTimer);
    state.pollTimer = null;
  }
}

async function handleCreateSession(): Promise<void> {
  if (!state.logId) return;
  state.style = (($("style-select") as HTMLSelectElement).value as PromptStyle) ?? "optimized";
  try {
    const session = await client.createSession(state.logId, state.style);
    state.sessionId = session.session_id;
    $("session-label").textContent = `session ${session.session_id} (${state.style})`;
    $("chat").hidden = false;
    await refreshSession();
  } catch (error) {
    banner(describeError(error));
  }
}

async function handleRunAnalysis(): Promise<void> {
  if (!state.sessionId) return;
  const module = ($("module-select") as HTMLSelectElement).value as EngineModule;
  const task = ($("task-select") as HTMLSelectElement).value as AnalysisTask;
  setPending(true);
  await refreshSession();
  try {
    const result = await client.runAnalysis(state.sessionId, module, task);
    if (result.not_available) {
      banner(`provider unavailable after ${result.attempts} attempts (N.A.)`);
    }
  } catch (error) {
    banner(describeError(error));
  } finally {
    setPending(false);
    await refreshSession();
  }
}

async function handleSend(event: Event): Promise<void> {
  event.preventDefault();
  if (!state.sessionId) return;
  const input = $("chat-input") as HTMLInputElement;
  const text = input.value.trim();
  if (!text) return;
  setPending(true);
  await refreshSession();
  try {
    await client.sendMessage(state.sessionId, text);
    input.value = "";
  } catch (error) {
    banner(describeError(error));
  } finally {
    setPending(false);
    await refreshSession();
  }
}

async function refreshRatings(): Promise<void> {
  const groupBy = ($("group-by") as HTMLSelectElement).value;
  const box = $("rating-bars");
  try {
    const report = await client.ratingsDistribution(groupBy);
    box.replaceChildren();
    for (const bar of ratingBars(report)) {
      const row = el("div", "bar-row");
      row.appendChild(el("div", "bar-label", `${bar.group} (${bar.total})`));
      const track = el("div", "bar-track");
      for (const segment of bar.segments) {
        if (segment.percent === 0) continue;
        const chunk = el(
          "div",
          `bar-seg cat-${segment.category.toLowerCase()}`,
          `${segment.category} ${segment.percent}%`,
        );
        chunk.style.width = `${segment.percent}%`;
        chunk.title = `${segment.category}: ${segment.count} of ${bar.total}`;
        track.appendChild(chunk);
      }
      row.appendChild(track);
      box.appendChild(row);
    }
  } catch (error) {
    box.replaceChildren(el("div", "empty", describeError(error)));
  }
}

async function handleRate(event: Event): Promise<void> {
  event.preventDefault();
  try {
    await client.postRating({
      category: ($("rate-category") as HTMLSelectElement).value,
      sector: ($("rate-sector") as HTMLInputElement).value,
      gender: ($("rate-gender") as HTMLInputElement).value,
      style: state.style,
      module: ($("module-select") as HTMLSelectElement).value,
      session_id: state.sessionId ?? "",
    });
    await refreshRatings();
  } catch (error) {
    banner(describeError(error));
  }
}

function populateSelectors(): void {
  const moduleSelect = $("module-select") as HTMLSelectElement;
  for (const module of MODULES) {
    const option = el("option", "", module);
    option.value = module;
    moduleSelect.appendChild(option);
  }
  const taskSelect = $("task-select") as HTMLSelectElement;
  for (const task of TASKS) {
    const option = el("option", "", task);
    option.value = task;
    taskSelect.appendChild(option);
  }
}

export function boot(): void {
  populateSelectors();
  $("upload-form").addEventListener("submit", (event) => void handleUpload(event));
  $("create-session").addEventListener("click", () => void handleCreateSession());
  $("run-btn").addEventListener("click", () => void handleRunAnalysis());
  $("chat-form").addEventListener("submit", (event) => void handleSend(event));
  $("rate-form").addEventListener("submit", (event) => void handleRate(event));
  $("group-by").addEventListener("change", () => void refreshRatings());
  void refreshRatings();
}

if (typeof document !== "undefined" && document.getElementById("upload-form")) {
  boot();
}
