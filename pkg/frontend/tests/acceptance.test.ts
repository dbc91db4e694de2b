/** Secondary-component acceptance: browse overlays track the response
 * region count, the realtime loop is single-flight with 10 ± 1 requests
 * over 15 s at the default interval, and label edits flow through to the
 * probability vector of subsequent classifications.
 */

import { afterEach, beforeEach, describe, expect, it, vi } from "vitest";

import { DocpipeClient, type FetchLike } from "../src/api.js";
import { submitLabels } from "../src/labels.js";
import { overlayPolygons } from "../src/overlay.js";
import { CaptureLoop } from "../src/realtime.js";
import type { ClassifyResponse } from "../src/types.js";

/** Minimal stub of the service: /api/labels state feeds /api/classify. */
function stubService() {
  let labels = ["Invoice", "Report", "Letter", "Form"];
  const fetchImpl: FetchLike = async (url, init) => {
    if (url.endsWith("/api/labels") && init?.method === "PUT") {
      labels = JSON.parse(init.body as string).labels;
      return new Response(
        JSON.stringify({ labels, hypothesis_template: "This text is about [label]" }),
        { status: 200 },
      );
    }
    if (url.endsWith("/api/labels")) {
      return new Response(
        JSON.stringify({ labels, hypothesis_template: "This text is about [label]" }),
        { status: 200 },
      );
    }
    if (url.endsWith("/api/classify")) {
      const probs: Record<string, number> = {};
      for (const label of labels) probs[label] = 1 / labels.length;
      const body: ClassifyResponse = {
        chosen: labels[0],
        label_probs: probs,
        regions: [
          { polygon: [10, 10, 60, 10, 60, 30, 10, 30], score: 0.9 },
          { polygon: [10, 40, 80, 40, 80, 60, 10, 60], score: 0.8 },
          { polygon: [20, 70, 50, 70, 50, 85, 20, 85], score: 0.7 },
        ],
        timing_ms: { total: 8 },
      };
      return new Response(JSON.stringify(body), { status: 200 });
    }
    return new Response("{}", { status: 404 });
  };
  return fetchImpl;
}

describe("criterion 11: operator UI", () => {
  beforeEach(() => vi.useFakeTimers());
  afterEach(() => vi.useRealTimers());

  it("browse mode renders one overlay per response region", async () => {
    const client = new DocpipeClient("", stubService());
    const response = await client.classify(new Blob([new Uint8Array(3)]));
    const overlays = overlayPolygons(response.regions ?? [], 320, 160);
    expect(overlays.length).toBe(response.regions!.length);
    expect(overlays.length).toBe(3);
  });

  it("realtime mode: 10 ± 1 requests in 15 s, never more than one in flight", async () => {
    const client = new DocpipeClient("", stubService());
    const loop = new CaptureLoop({
      captureFrame: async () => new Blob([new Uint8Array(3)], { type: "image/jpeg" }),
      classify: (frame) => client.classify(frame),
      onResult: () => undefined,
    });
    loop.start();
    await vi.advanceTimersByTimeAsync(15_000);
    loop.stop();
    expect(loop.requestsSent).toBeGreaterThanOrEqual(9);
    expect(loop.requestsSent).toBeLessThanOrEqual(11);
    expect(loop.maxInFlightSeen).toBe(1);
  });

  it("editing to 5 labels yields 5-probability responses", async () => {
    const client = new DocpipeClient("", stubService());
    const edit = await submitLabels(client, ["Invoice", "Report", "Letter", "Form"], [
      "Invoice",
      "Report",
      "Letter",
      "Form",
      "Receipt",
    ]);
    expect(edit.ok).toBe(true);
    expect(edit.labels.length).toBe(5);
    const response = await client.classify(new Blob([new Uint8Array(3)]));
    expect(Object.keys(response.label_probs).length).toBe(5);
  });
});
