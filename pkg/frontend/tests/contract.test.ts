/**
 * Contract tests against a live mock-backed pmchat server (see
 * server.setup.ts). Every figure the UI would render is asserted to equal
 * the corresponding API payload field.
 */

import { readFileSync } from "node:fs";
import { dirname, join } from "node:path";
import { fileURLToPath } from "node:url";

import { beforeAll, describe, expect, it } from "vitest";

import { ApiError, PmchatClient } from "../src/api.js";
import { kpiCards, ratingBars, sessionView, variantsTable } from "../src/views.js";
import { BASE_URL } from "./config.js";

const here = dirname(fileURLToPath(import.meta.url));
const L1_PATH = join(here, "..", "..", "fixtures", "logs", "l1.csv");

const MAPPING = {
  case_id: "Case ID",
  activity: "Activity",
  timestamp: "Complete Timestamp",
  resource: "Resource",
};

const METADATA = {
  sector: "Public Sector",
  economic_activity: "Municipality",
  process_name: "Issuance Of Municipal License",
  organization: "Metropolitan Licensing Office",
};

const client = new PmchatClient(BASE_URL);
let logId = "";

beforeAll(async () => {
  const csv = readFileSync(L1_PATH);
  const ingest = await client.ingestLog(new Blob([csv]), "l1.csv", MAPPING, METADATA);
  logId = ingest.log_id;
  await client.analyze(logId, "all");
});

describe("dashboard contract", () => {
  it("renders Total cases = 3 for the L1 fixture, straight from the API", async () => {
    const structural = await client.structural(logId);
    const temporal = await client.temporal(logId);
    const cards = kpiCards(structural, temporal);
    const totalCases = cards.find((card) => card.label === "Total cases");
    expect(totalCases?.value).toBe(3);
    expect(totalCases?.value).toBe(structural.total_cases);
    expect(cards.find((card) => card.label === "Total variants")?.value).toBe(
      structural.total_variants,
    );
    expect(cards.find((card) => card.label === "First event date")?.value).toBe(
      temporal.first_event_date,
    );
  });

  it("shows variant and bottleneck rows copied from the payloads", async () => {
    const variants = await client.variants(logId);
    const table = variantsTable(variants.variants);
    expect(table.rows).toHaveLength(variants.variants.length);
    expect(table.rows[0]![2]).toBe(variants.variants[0]!.frequency);
    const performance = await client.performance(logId);
    expect(performance.bottlenecks[0]!.from).toBe("A");
  });

  it("exposes the DFG exactly as served", async () => {
    const dfg = await client.dfg(logId);
    expect(dfg.edges).toContainEqual({ from: "A", to: "B", frequency: 2 });
    expect(dfg.start_activities).toEqual({ A: 3 });
  });

  it("surfaces schema errors verbatim in the envelope", async () => {
    const bad = new Blob(["nothing,useful\n1,2\n"]);
    await expect(client.ingestLog(bad, "bad.csv", MAPPING, METADATA)).rejects.toSatisfy(
      (error: unknown) =>
        error instanceof ApiError && error.envelope.code === "schema_error",
    );
  });

  it("re-uploading the same file is a content-addressed cache hit", async () => {
    const csv = readFileSync(L1_PATH);
    const again = await client.ingestLog(new Blob([csv]), "l1.csv", MAPPING, METADATA);
    expect(again.log_id).toBe(logId);
    expect(again.cached).toBe(true);
  });
});

describe("chat contract", () => {
  it("chat history survives a page refresh (server is the source of truth)", async () => {
    const session = await client.createSession(logId, "optimized");
    await client.runAnalysis(session.session_id, "discovery", "Analytics");
    await client.sendMessage(session.session_id, "Which handover is busiest?");

    const beforeRefresh = sessionView(await client.history(session.session_id));
    // Simulate a refresh: a brand-new client rebuilds the view from the API.
    const freshClient = new PmchatClient(BASE_URL);
    const afterRefresh = sessionView(await freshClient.history(session.session_id));

    expect(afterRefresh.entries).toEqual(beforeRefresh.entries);
    expect(afterRefresh.auditedPrompts).toEqual(beforeRefresh.auditedPrompts);
    expect(afterRefresh.entries.length).toBeGreaterThanOrEqual(4);
    expect(afterRefresh.entries.at(-1)!.role).toBe("assistant");
  });

  it("prompt style changes the audited prompt sections", async () => {
    const optimized = await client.createSession(logId, "optimized");
    await client.runAnalysis(optimized.session_id, "dashboard", "Analytics");
    const optimizedPrompt = sessionView(await client.history(optimized.session_id))
      .auditedPrompts[0]!;
    expect(optimizedPrompt).toContain("Analysis Focus: ");
    expect(optimizedPrompt).not.toContain("KPIs: ");

    const zeroShot = await client.createSession(logId, "zero_shot");
    await client.runAnalysis(zeroShot.session_id, "dashboard", "Analytics");
    const zeroShotPrompt = sessionView(await client.history(zeroShot.session_id))
      .auditedPrompts[0]!;
    expect(zeroShotPrompt).toContain("KPIs: ");
    expect(zeroShotPrompt).toContain("Sector: ");
    expect(zeroShotPrompt).not.toContain("Deep Dive: ");
  });

  it("redaction violations come back as structured errors, not sent messages", async () => {
    const session = await client.createSession(logId, "optimized");
    await client.runAnalysis(session.session_id, "dashboard", "Analytics");
    const before = sessionView(await client.history(session.session_id));
    await expect(
      client.sendMessage(session.session_id, "show me raw case c1"),
    ).rejects.toSatisfy(
      (error: unknown) =>
        error instanceof ApiError && error.envelope.code === "redaction_violation",
    );
    const after = sessionView(await client.history(session.session_id));
    expect(after.entries).toEqual(before.entries);
  });
});

describe("ratings contract", () => {
  it("bars equal the API distribution values exactly", async () => {
    const seed = [
      { category: "Good", sector: "Service", gender: "Female" },
      { category: "Good", sector: "Service", gender: "Male" },
      { category: "Mediocre", sector: "Service", gender: "Male" },
      { category: "Good", sector: "Industrial", gender: "Female" },
      { category: "Bad", sector: "Industrial", gender: "Male" },
      { category: "NA", sector: "Industrial", gender: "Female" },
    ];
    for (const rating of seed) {
      await client.postRating(rating);
    }
    const report = await client.ratingsDistribution("sector");
    const bars = ratingBars(report);
    expect(bars.map((bar) => bar.group)).toEqual(Object.keys(report.groups).sort());
    for (const bar of bars) {
      const group = report.groups[bar.group]!;
      expect(bar.total).toBe(group.total);
      for (const segment of bar.segments) {
        expect(segment.percent).toBe(group.percentages[segment.category] ?? 0);
        expect(segment.count).toBe(group.counts[segment.category] ?? 0);
      }
    }
  });
});
