/** Bed entry form and referral finder behavior. */

import { describe, expect, it } from "vitest";

import type { BedFinderRow, Envelope } from "../src/api.js";
import { Dashboard } from "../src/app.js";
import { renderBedFinder, validateBedForm } from "../src/views/beds.js";

import finderFixture from "./fixtures/finder.json";
import rs0002Fixture from "./fixtures/beds_rs0002.json";

const NOW = "2021-03-25T09:00:00+07:00";

describe("bed entry form validation", () => {
  it("accepts a well-formed report", () => {
    const result = validateBedForm(
      { hospital: "RS0001", ward: "icu_neg_vent", total: "10", occupied: "4" }, NOW);
    expect(result.ok).toBe(true);
    if (result.ok) {
      expect(result.payload).toEqual({
        hospital: "RS0001", ward: "icu_neg_vent",
        total_beds: 10, occupied_beds: 4, reported_at: NOW,
      });
    }
  });

  it("blocks occupied greater than total client-side", () => {
    const result = validateBedForm(
      { hospital: "RS0001", ward: "icu_neg_vent", total: "10", occupied: "12" }, NOW);
    expect(result.ok).toBe(false);
    if (!result.ok) {
      expect(result.error).toContain("12");
      expect(result.error).toContain("10");
    }
  });

  it("blocks non-numeric and negative input", () => {
    expect(validateBedForm(
      { hospital: "H", ward: "picu", total: "x", occupied: "1" }, NOW).ok).toBe(false);
    expect(validateBedForm(
      { hospital: "H", ward: "picu", total: "5", occupied: "-1" }, NOW).ok).toBe(false);
    expect(validateBedForm(
      { hospital: "H", ward: "warp", total: "5", occupied: "1" }, NOW).ok).toBe(false);
  });
});

function fetchStub(routes: Record<string, { status: number; body: unknown }>): typeof fetch {
  return (async (input: RequestInfo | URL) => {
    const url = String(input);
    for (const [prefix, reply] of Object.entries(routes)) {
      if (url.includes(prefix)) {
        return new Response(JSON.stringify(reply.body), { status: reply.status });
      }
    }
    return new Response("not found", { status: 404 });
  }) as typeof fetch;
}

describe("bed entry form against the server", () => {
  it("surfaces a server rejection verbatim", async () => {
    const dashboard = new Dashboard(
      { base: "", credential: "tok", hospital: "RS0001" },
      fetchStub({
        "/v1/beds/report": {
          status: 409,
          body: { detail: "RS0001/icu_neg_vent already has a report from 2021-03-25T08:00:00+07:00" },
        },
      }),
    );
    const result = await dashboard.submitBedForm(
      { ward: "icu_neg_vent", total: "10", occupied: "4" });
    expect(result.ok).toBe(false);
    expect(result.message).toBe(
      "RS0001/icu_neg_vent already has a report from 2021-03-25T08:00:00+07:00");
    expect(dashboard.viewHtml("bed-form")).toContain("already has a report");
  });

  it("client-side invariant blocks before any request is sent", async () => {
    let called = 0;
    const dashboard = new Dashboard(
      { base: "", credential: "tok", hospital: "RS0001" },
      (async () => {
        called += 1;
        return new Response("{}", { status: 200 });
      }) as typeof fetch,
    );
    const result = await dashboard.submitBedForm(
      { ward: "icu_neg_vent", total: "10", occupied: "12" });
    expect(result.ok).toBe(false);
    expect(called).toBe(0);
  });

  it("on success the operator's own board updates without a reload", async () => {
    const dashboard = new Dashboard(
      { base: "", credential: "tok", hospital: "RS0002" },
      fetchStub({
        "/v1/beds/report": {
          status: 200,
          body: { watermark: 9, generated_at: "t", data: { outcome: "applied" } },
        },
        "/v1/beds/RS0002": { status: 200, body: rs0002Fixture },
      }),
    );
    const result = await dashboard.submitBedForm(
      { ward: "icu_neg_vent", total: "20", occupied: "12" });
    expect(result.ok).toBe(true);
    expect(dashboard.viewHtml("hospital-board")).toContain("icu_neg_vent");
    expect(dashboard.viewHtml("hospital-board")).toContain('data-value="8"');
  });
});

describe("bed finder", () => {
  const fixture = finderFixture as Envelope<BedFinderRow[]>;

  it("renders rows in API order exactly", () => {
    const html = renderBedFinder("icu_neg_vent", 1, fixture.data);
    const order = [...html.matchAll(/data-rank="(\d+)" data-hospital="([^"]+)"/g)]
      .map((m) => m[2]);
    expect(order).toEqual(fixture.data.map((r) => r.hospital));
  });

  it("never re-sorts even deliberately shuffled input", () => {
    const shuffled = [...fixture.data].reverse();
    const html = renderBedFinder("icu_neg_vent", 1, shuffled);
    const order = [...html.matchAll(/data-hospital="([^"]+)"/g)].map((m) => m[1]);
    expect(order).toEqual(shuffled.map((r) => r.hospital));
  });

  it("recorded ranking puts the largest fresh availability first", () => {
    expect(fixture.data.map((r) => [r.name, r.available])).toEqual([
      ["RS Umum PAD Gatot Soebroto", 8],
      ["RS Umum Daerah Tarakan", 7],
      ["RSUPN Dr. Cipto Mangunkusumo", 4],
    ]);
  });

  it("empty result states the fact instead of a blank pane", () => {
    const html = renderBedFinder("picu", 5, []);
    expect(html).toContain("Tidak ada tempat tidur");
  });
});
