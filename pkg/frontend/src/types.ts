/** Wire shapes of the docpipe service and the UI session state. */

export interface RegionPayload {
  /** Flat coordinate list x1,y1,...,xn,yn in original-image pixels. */
  polygon: number[];
  score: number;
}

export interface ClassifyResponse {
  chosen: string;
  label_probs: Record<string, number>;
  regions?: RegionPayload[];
  summary?: string;
  timing_ms: Record<string, number>;
}

export interface DetectResponse {
  regions: RegionPayload[];
  timing_ms: Record<string, number>;
}

export interface LabelsResponse {
  labels: string[];
  hypothesis_template: string;
}

export interface HealthResponse {
  status: string;
  backends: Record<string, { impl: string; ready: boolean }>;
}

export const UNCLASSIFIED = "Unclassified";

export type Mode = "browse" | "realtime";

export const MIN_CAPTURE_INTERVAL_MS = 250;
export const DEFAULT_CAPTURE_INTERVAL_MS = 1500;

export interface UiSession {
  mode: Mode;
  captureIntervalMs: number;
  /** Local mirror of the service label set. */
  labels: string[];
  template: string;
  lastResponse: ClassifyResponse | null;
}

export function createSession(): UiSession {
  return {
    mode: "browse",
    captureIntervalMs: DEFAULT_CAPTURE_INTERVAL_MS,
    labels: [],
    template: "",
    lastResponse: null,
  };
}
