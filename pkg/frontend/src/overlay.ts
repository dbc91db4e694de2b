/** Pure rendering models: response + display geometry in, plain data out.
 *
 * main.ts turns these into DOM; tests snapshot them directly.
 */

import type { ClassifyResponse, RegionPayload } from "./types.js";
import { UNCLASSIFIED } from "./types.js";

export interface OverlayPolygon {
  /** SVG points attribute, already scaled to display pixels. */
  points: string;
  strokeWidth: number;
  score: number;
}

export interface LabelBar {
  label: string;
  prob: number;
  percent: string;
  chosen: boolean;
}

export interface BadgeModel {
  kind: "chosen" | "neutral";
  text: string;
}

export interface TimingRow {
  stage: string;
  ms: number;
}

export function overlayPolygons(
  regions: RegionPayload[],
  displayWidth: number,
  imageWidth: number,
): OverlayPolygon[] {
  const scale = imageWidth > 0 ? displayWidth / imageWidth : 1;
  return regions.map((region) => {
    const parts: string[] = [];
    for (let i = 0; i + 1 < region.polygon.length; i += 2) {
      parts.push(`${(region.polygon[i] * scale).toFixed(1)},${(region.polygon[i + 1] * scale).toFixed(1)}`);
    }
    return {
      points: parts.join(" "),
      // keep the stroke ~2 css px regardless of how far the image is scaled
      strokeWidth: Math.max(1, Math.round(2 * Math.max(scale, 0.5) * 10) / 10),
      score: region.score,
    };
  });
}

export function labelBars(response: ClassifyResponse): LabelBar[] {
  const entries = Object.entries(response.label_probs);
  entries.sort((a, b) => b[1] - a[1]);
  const hasWinner = response.chosen !== UNCLASSIFIED;
  return entries.map(([label, prob]) => ({
    label,
    prob,
    percent: `${(prob * 100).toFixed(1)}%`,
    chosen: hasWinner && label === response.chosen,
  }));
}

export function badge(response: ClassifyResponse): BadgeModel {
  if (response.chosen === UNCLASSIFIED) {
    return { kind: "neutral", text: "Unclassified" };
  }
  return { kind: "chosen", text: response.chosen };
}

export function timingRows(response: ClassifyResponse): TimingRow[] {
  return Object.entries(response.timing_ms)
    .filter(([stage]) => stage !== "total")
    .map(([stage, ms]) => ({ stage, ms }))
    .concat(
      "total" in response.timing_ms ? [{ stage: "total", ms: response.timing_ms.total }] : [],
    );
}

export interface RenderModel {
  badge: BadgeModel;
  bars: LabelBar[];
  polygons: OverlayPolygon[];
  timings: TimingRow[];
  summary: string | null;
}

/** Everything the result pane shows, as one deterministic structure. */
export function renderModel(
  response: ClassifyResponse,
  displayWidth: number,
  imageWidth: number,
): RenderModel {
  return {
    badge: badge(response),
    bars: labelBars(response),
    polygons: overlayPolygons(response.regions ?? [], displayWidth, imageWidth),
    timings: timingRows(response),
    summary: response.summary ?? null,
  };
}
