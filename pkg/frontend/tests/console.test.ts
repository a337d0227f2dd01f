import { readFileSync } from "node:fs";
import { join } from "node:path";
import { describe, expect, it } from "vitest";

import { ApiClient, ApiError, type FetchLike } from "../src/api";
import { packetDiff } from "../src/diff";
import { FEATURES } from "../src/features";
import { emptyForm, formFromState, formToState, validateForm } from "../src/form";
import { attentionBars, probabilitySum, renderDiff, renderPacket } from "../src/render";
import { DecisionPacket } from "../src/schema";

const fixture = (name: string): unknown =>
  JSON.parse(
    readFileSync(
      join(new URL(".", import.meta.url).pathname, "fixtures", `${name}.json`),
      "utf-8",
    ),
  );

/** Fixture backend: replays packets recorded from the real HTTP service. */
function fixtureFetch(): FetchLike {
  return async (url, init) => {
    const respond = (status: number, body: unknown) => ({
      ok: status < 400,
      status,
      json: async () => body,
    });
    if (url.endsWith("/health")) return respond(200, fixture("health"));
    if (url.endsWith("/clusters")) return respond(200, fixture("clusters"));
    if (url.endsWith("/whatif")) return respond(200, fixture("whatif_map_cross"));
    if (url.endsWith("/recommend")) {
      const body = JSON.parse(init?.body ?? "{}");
      if (!("map" in body.state)) return respond(400, fixture("validation_error"));
      return respond(200, fixture("recommend_intermediate"));
    }
    return respond(404, { error: "not found" });
  };
}

const client = new ApiClient("http://backend", fixtureFetch());

describe("state form", () => {
  it("mirrors the 30 backend features", () => {
    expect(FEATURES).toHaveLength(30);
    expect(Object.keys(emptyForm().values)).toHaveLength(30);
  });

  it("flags missing and out-of-range fields without sending a request", () => {
    const form = emptyForm();
    const errors = validateForm(form);
    expect(errors).toHaveLength(30);
    form.values["map"] = "-10"; // negative MAP is implausible
    const mapError = validateForm(form).find((e) => e.field === "map");
    expect(mapError?.message).toContain("plausible range");
  });

  it("round-trips a packet state through the form", () => {
    const packet = DecisionPacket.parse(fixture("recommend_intermediate"));
    const form = formFromState(packet.state);
    expect(validateForm(form)).toHaveLength(0);
    expect(formToState(form)).toEqual(packet.state);
  });
});

describe("submit against the fixture backend", () => {
  it("renders tier, action card with source branch, and probabilities summing to 1", async () => {
    const packet = DecisionPacket.parse(fixture("recommend_intermediate"));
    const got = await client.recommend(packet.state);
    expect(got.tier).toBe("Intermediate");
    const html = renderPacket(got);
    expect(html).toContain(`tier-badge`);
    expect(html).toContain(got.action_name as string);
    expect(html).toContain(`source-branch">${got.source}<`);
    expect(probabilitySum(got)).toBeCloseTo(1.0, 9);
  });

  it("attention bar heights equal the packet weights exactly", async () => {
    const got = await client.recommend(
      DecisionPacket.parse(fixture("recommend_intermediate")).state,
    );
    const bars = attentionBars(got);
    expect(bars.map((b) => b.weight)).toEqual(got.attention_weights);
    const html = renderPacket(got);
    for (const bar of bars) {
      expect(html).toContain(`data-weight="${bar.weight}"`);
    }
  });

  it("renders an advisory badge without an action card for routed tiers", () => {
    const packet = DecisionPacket.parse(fixture("recommend_intermediate"));
    const advisory = {
      ...packet,
      advisory: "Low-risk tier: no intervention is needed.",
      action: null,
      action_name: null,
      source: "tier-routing",
      probabilities: null,
      attention_weights: null,
      rationale: null,
      chunk_ids: [],
    };
    const html = renderPacket(DecisionPacket.parse(advisory));
    expect(html).toContain("advisory");
    expect(html).not.toContain("action-card");
  });

  it("surfaces server field errors inline", async () => {
    const state = { spo2: 97 } as Record<string, number>;
    await expect(client.recommend(state)).rejects.toSatisfy((err: unknown) => {
      return err instanceof ApiError && "map" in err.fields;
    });
  });
});

describe("what-if comparison", () => {
  it("identical forms yield identical packets and an empty diff", async () => {
    const packet = DecisionPacket.parse(fixture("recommend_intermediate"));
    const a = await client.recommend(packet.state);
    const b = await client.recommend(packet.state);
    expect(a).toEqual(b);
    const diff = packetDiff(a, b);
    expect(diff.empty).toBe(true);
    expect(renderDiff(diff)).toContain("No changes");
  });

  it("lowering MAP across 65 marks the field and the action change", async () => {
    const [base, edited] = await client.whatif([]);
    expect(base.state["map"]).toBeGreaterThan(65);
    expect(edited.state["map"]).toBeLessThan(65);
    const diff = packetDiff(base, edited);
    expect(diff.changedFields).toContain("map");
    expect(diff.actionChanged).toBe(true);
    const html = renderDiff(diff);
    expect(html).toContain(`data-field="map"`);
    expect(html).toContain("action changed");
  });

  it("three queued edits produce three ordered comparisons", async () => {
    const packet = DecisionPacket.parse(fixture("recommend_intermediate"));
    const edits = [70, 60, 50].map((map) => ({ ...packet.state, map }));
    const results: DecisionPacket[] = [];
    for (const state of edits) results.push(await client.recommend(state));
    expect(results).toHaveLength(3);
    const diffs = results.map((p) => packetDiff(results[0], p));
    expect(diffs[0].empty).toBe(true);
  });
});

describe("auxiliary endpoints", () => {
  it("health reports ok with per-stage hashes", async () => {
    const health = await client.health();
    expect(health.status).toBe("ok");
  });

  it("cluster table rows carry valid risk categories", async () => {
    const rows = await client.clusters();
    expect(rows.length).toBeGreaterThan(0);
    for (const row of rows) {
      expect(["Low", "Intermediate", "High"]).toContain(row.risk_category);
    }
  });
});
