/**
 * Pure view-model builders.
 *
 * Each builder copies figures from an API payload into the shape the DOM
 * layer renders verbatim. No KPI or percentage arithmetic happens here --
 * only selection, labelling, and (for the graph) geometry.
 */

import type {
  BottleneckRow,
  ChatMessage,
  DfgPayload,
  DistributionReport,
  SessionHistory,
  StructuralKpis,
  TemporalKpis,
  VariantRow,
} from "./api.js";

export interface KpiCard {
  label: string;
  value: string | number;
}

export function kpiCards(structural: StructuralKpis, temporal: TemporalKpis): KpiCard[] {
  return [
    { label: "Total cases", value: structural.total_cases },
    { label: "Total activities", value: structural.total_activities },
    { label: "Total variants", value: structural.total_variants },
    { label: "Total cases with rework", value: structural.total_cases_with_rework },
    { label: "First event date", value: temporal.first_event_date },
    { label: "Last event date", value: temporal.last_event_date },
    { label: "Span (seconds)", value: temporal.span_seconds },
  ];
}

export interface TableView {
  headers: string[];
  rows: (string | number)[][];
}

export function variantsTable(variants: VariantRow[], limit = 10): TableView {
  return {
    headers: ["#", "variant", "cases"],
    rows: variants
      .slice(0, limit)
      .map((variant, index) => [index + 1, variant.sequence.join(" → "), variant.frequency]),
  };
}

export function bottlenecksTable(bottlenecks: BottleneckRow[], limit = 10): TableView {
  return {
    headers: ["edge", "mean waiting (s)", "frequency"],
    rows: bottlenecks
      .slice(0, limit)
      .map((row) => [`${row.from} → ${row.to}`, row.mean_waiting, row.frequency]),
  };
}

export interface GraphNode {
  id: string;
  label: string;
  layer: number;
  row: number;
  x: number;
  y: number;
}

export interface GraphEdge {
  from: string;
  to: string;
  weight: number;
  thickness: number;
}

export interface GraphView {
  nodes: GraphNode[];
  edges: GraphEdge[];
  width: number;
  height: number;
}

const LAYER_WIDTH = 170;
const ROW_HEIGHT = 70;
const MARGIN = 60;

/** Layered left-to-right layout; edge thickness scales with frequency. */
export function dfgGraph(dfg: DfgPayload): GraphView {
  const nodes = Object.keys(dfg.activity_frequencies).sort();
  const layer = new Map<string, number>();
  for (const start of Object.keys(dfg.start_activities)) {
    layer.set(start, 0);
  }
  if (layer.size === 0 && nodes.length > 0) {
    layer.set(nodes[0]!, 0);
  }
  // BFS over forward edges; unreachable nodes land one layer past the deepest.
  let frontier = [...layer.keys()];
  while (frontier.length > 0) {
    const next: string[] = [];
    for (const node of frontier) {
      const depth = layer.get(node)!;
      for (const edge of dfg.edges) {
        if (edge.from === node && !layer.has(edge.to)) {
          layer.set(edge.to, depth + 1);
          next.push(edge.to);
        }
      }
    }
    frontier = next;
  }
  const deepest = Math.max(0, ...layer.values());
  for (const node of nodes) {
    if (!layer.has(node)) {
      layer.set(node, deepest + 1);
    }
  }
  const rowsPerLayer = new Map<number, number>();
  const placed: GraphNode[] = nodes.map((id) => {
    const nodeLayer = layer.get(id)!;
    const row = rowsPerLayer.get(nodeLayer) ?? 0;
    rowsPerLayer.set(nodeLayer, row + 1);
    return {
      id,
      label: `${id} (${dfg.activity_frequencies[id]})`,
      layer: nodeLayer,
      row,
      x: MARGIN + nodeLayer * LAYER_WIDTH,
      y: MARGIN + row * ROW_HEIGHT,
    };
  });
  const maxWeight = Math.max(1, ...dfg.edges.map((edge) => edge.frequency));
  const edges: GraphEdge[] = dfg.edges.map((edge) => ({
    from: edge.from,
    to: edge.to,
    weight: edge.frequency,
    thickness: 1.5 + (edge.frequency / maxWeight) * 6,
  }));
  return {
    nodes: placed,
    edges,
    width: MARGIN * 2 + (Math.max(0, ...layer.values()) + 1) * LAYER_WIDTH,
    height: MARGIN * 2 + Math.max(1, ...rowsPerLayer.values()) * ROW_HEIGHT,
  };
}

export interface RatingBarSegment {
  category: string;
  percent: number;
  count: number;
}

export interface RatingBar {
  group: string;
  total: number;
  segments: RatingBarSegment[];
}

const CATEGORY_ORDER = ["Good", "Mediocre", "Bad", "NA"] as const;

export function ratingBars(report: DistributionReport): RatingBar[] {
  return Object.keys(report.groups)
    .sort()
    .map((group) => {
      const dist = report.groups[group]!;
      return {
        group,
        total: dist.total,
        segments: CATEGORY_ORDER.map((category) => ({
          category,
          percent: dist.percentages[category] ?? 0,
          count: dist.counts[category] ?? 0,
        })),
      };
    });
}

export interface ChatEntry {
  role: ChatMessage["role"];
  content: string;
  notAvailable: boolean;
}

export interface SessionView {
  sessionId: string;
  logId: string;
  promptStyle: string;
  entries: ChatEntry[];
  auditedPrompts: string[];
  pending: boolean;
}

/** Mirror of the server history; refreshing the page rebuilds exactly this. */
export function sessionView(history: SessionHistory, pending = false): SessionView {
  const entries: ChatEntry[] = history.messages.map((message) => ({
    role: message.role,
    content: message.content,
    notAvailable: false,
  }));
  for (const analysis of history.analyses) {
    if (analysis.not_available) {
      entries.push({
        role: "assistant",
        content: `N.A. after ${analysis.attempts} attempts`,
        notAvailable: true,
      });
    }
  }
  return {
    sessionId: history.session_id,
    logId: history.log_id,
    promptStyle: history.prompt_style,
    entries,
    auditedPrompts: history.analyses.map((analysis) => analysis.prompt_text),
    pending,
  };
}
