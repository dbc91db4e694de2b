/** Typed client for the docpipe service endpoints.
 *
 * The UI talks to exactly these five routes; nothing else. fetch is
 * injectable so tests can record and stub the traffic.
 */

import type {
  ClassifyResponse,
  DetectResponse,
  HealthResponse,
  LabelsResponse,
} from "./types.js";

export type FetchLike = (input: string, init?: RequestInit) => Promise<Response>;

export const ENDPOINTS = {
  health: "/api/health",
  labels: "/api/labels",
  detect: "/api/detect",
  classify: "/api/classify",
} as const;

export class ApiError extends Error {
  status: number;
  /** Failing backend kind, when the service names one (502 responses). */
  backend?: string;

  constructor(status: number, message: string, backend?: string) {
    super(message);
    this.status = status;
    this.backend = backend;
  }
}

export interface ClassifyOptions {
  labels?: string[];
  summarize?: boolean;
  returnRegions?: boolean;
}

async function raiseForStatus(res: Response): Promise<void> {
  if (res.ok) return;
  let message = `HTTP ${res.status}`;
  let backend: string | undefined;
  try {
    const body = await res.json();
    if (body && typeof body.error === "string") message = body.error;
    if (body && typeof body.backend === "string") backend = body.backend;
  } catch {
    // non-JSON error body; keep the status message
  }
  throw new ApiError(res.status, message, backend);
}

export class DocpipeClient {
  private fetchImpl: FetchLike;
  private baseUrl: string;

  constructor(baseUrl = "", fetchImpl?: FetchLike) {
    this.baseUrl = baseUrl.replace(/\/$/, "");
    this.fetchImpl = fetchImpl ?? ((input, init) => fetch(input, init));
  }

  private url(path: string): string {
    return this.baseUrl + path;
  }

  async health(): Promise<HealthResponse> {
    const res = await this.fetchImpl(this.url(ENDPOINTS.health));
    await raiseForStatus(res);
    return res.json();
  }

  async getLabels(): Promise<LabelsResponse> {
    const res = await this.fetchImpl(this.url(ENDPOINTS.labels));
    await raiseForStatus(res);
    return res.json();
  }

  async putLabels(labels: string[]): Promise<LabelsResponse> {
    const res = await this.fetchImpl(this.url(ENDPOINTS.labels), {
      method: "PUT",
      headers: { "content-type": "application/json" },
      body: JSON.stringify({ labels }),
    });
    await raiseForStatus(res);
    return res.json();
  }

  async classify(image: Blob, options: ClassifyOptions = {}): Promise<ClassifyResponse> {
    const form = new FormData();
    form.append("image", image, "frame.jpg");
    if (options.labels && options.labels.length > 0) {
      form.append("labels", options.labels.join(","));
    }
    if (options.summarize) form.append("summarize", "true");
    form.append("return_regions", options.returnRegions === false ? "false" : "true");
    const res = await this.fetchImpl(this.url(ENDPOINTS.classify), {
      method: "POST",
      body: form,
    });
    await raiseForStatus(res);
    return res.json();
  }

  async detect(image: Blob): Promise<DetectResponse> {
    const form = new FormData();
    form.append("image", image, "frame.jpg");
    const res = await this.fetchImpl(this.url(ENDPOINTS.detect), {
      method: "POST",
      body: form,
    });
    await raiseForStatus(res);
    return res.json();
  }
}
