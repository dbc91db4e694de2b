/** DOM wiring for the operator UI: browse uploads, the real-time webcam
 * loop, live label editing, and error banners. All rendering goes through
 * the pure models in overlay.ts.
 */

import { ApiError, DocpipeClient } from "./api.js";
import { parseLabelInput, submitLabels, validateLabels } from "./labels.js";
import { renderModel } from "./overlay.js";
import { CaptureLoop, startRealtimeMode, switchMode } from "./realtime.js";
import { createSession, type ClassifyResponse, type Mode } from "./types.js";

const client = new DocpipeClient("");
let session = createSession();
let activeLoop: CaptureLoop | null = null;
let mediaStream: MediaStream | null = null;

function el<T extends HTMLElement>(id: string): T {
  const node = document.getElementById(id);
  if (!node) throw new Error(`missing element #${id}`);
  return node as T;
}

function showBanner(message: string, kind: "error" | "info" = "error"): void {
  const banner = el<HTMLDivElement>("banner");
  banner.textContent = message;
  banner.className = `banner ${kind}`;
  banner.hidden = false;
}

function describeError(err: unknown): string {
  if (err instanceof ApiError) {
    const backend = err.backend ? ` (backend: ${err.backend})` : "";
    return `HTTP ${err.status}${backend}: ${err.message}`;
  }
  return err instanceof Error ? err.message : String(err);
}

function renderResponse(response: ClassifyResponse, imageWidth: number): void {
  session = { ...session, lastResponse: response };
  const img = el<HTMLImageElement>("preview");
  const displayWidth = img.clientWidth || imageWidth;
  const model = renderModel(response, displayWidth, imageWidth);

  const badgeNode = el<HTMLSpanElement>("chosen-badge");
  badgeNode.textContent = model.badge.text;
  badgeNode.className = `badge ${model.badge.kind}`;

  const bars = el<HTMLDivElement>("label-bars");
  bars.replaceChildren(
    ...model.bars.map((bar) => {
      const row = document.createElement("div");
      row.className = bar.chosen ? "bar chosen" : "bar";
      const fill = document.createElement("span");
      fill.className = "fill";
      fill.style.width = bar.percent;
      const text = document.createElement("span");
      text.className = "text";
      text.textContent = `${bar.label} ${bar.percent}`;
      row.append(fill, text);
      return row;
    }),
  );

  const svg = el<HTMLElement>("overlay");
  svg.setAttribute("viewBox", `0 0 ${displayWidth} ${img.clientHeight || 1}`);
  svg.replaceChildren(
    ...model.polygons.map((poly) => {
      const node = document.createElementNS("http://www.w3.org/2000/svg", "polygon");
      node.setAttribute("points", poly.points);
      node.setAttribute("stroke-width", String(poly.strokeWidth));
      node.setAttribute("class", "region");
      return node;
    }),
  );

  el<HTMLDivElement>("timings").textContent = model.timings
    .map((row) => `${row.stage} ${row.ms.toFixed(0)}ms`)
    .join("  ·  ");
  const summaryNode = el<HTMLParagraphElement>("summary");
  summaryNode.textContent = model.summary ?? "";
  summaryNode.hidden = model.summary === null;
}

async function browseClassify(file: File): Promise<void> {
  const img = el<HTMLImageElement>("preview");
  const url = URL.createObjectURL(file);
  const natural = await new Promise<number>((resolve, reject) => {
    img.onload = () => resolve(img.naturalWidth);
    img.onerror = () => reject(new Error("cannot preview this file"));
    img.src = url;
  });
  try {
    const response = await client.classify(file, {
      returnRegions: true,
      summarize: el<HTMLInputElement>("summarize").checked,
    });
    renderResponse(response, natural);
    el<HTMLDivElement>("banner").hidden = true;
  } catch (err) {
    // the previous result stays on screen
    showBanner(describeError(err));
  }
}

function captureFrameFromVideo(video: HTMLVideoElement): () => Promise<Blob> {
  const canvas = document.createElement("canvas");
  return () =>
    new Promise<Blob>((resolve, reject) => {
      canvas.width = video.videoWidth || 640;
      canvas.height = video.videoHeight || 480;
      const ctx = canvas.getContext("2d");
      if (!ctx) {
        reject(new Error("no 2d canvas context"));
        return;
      }
      ctx.drawImage(video, 0, 0, canvas.width, canvas.height);
      canvas.toBlob(
        (blob) => (blob ? resolve(blob) : reject(new Error("frame encode failed"))),
        "image/jpeg",
        0.8,
      );
    });
}

function setIndicator(state: "idle" | "sent" | "skipped" | "warn"): void {
  el<HTMLSpanElement>("capture-indicator").className = `indicator ${state}`;
}

async function enterRealtime(): Promise<void> {
  const video = el<HTMLVideoElement>("camera");
  const start = await startRealtimeMode(
    async () => {
      mediaStream = await navigator.mediaDevices.getUserMedia({ video: true });
      video.srcObject = mediaStream;
      await video.play();
      return mediaStream;
    },
    {
      captureFrame: captureFrameFromVideo(video),
      classify: (frame) => client.classify(frame, { returnRegions: true }),
      onResult: (response) => {
        renderResponse(response, video.videoWidth || 640);
        setIndicator("idle");
      },
      onError: () => setIndicator("warn"),
      onTick: (info) => setIndicator(info.sent ? "sent" : "skipped"),
    },
    session.captureIntervalMs,
  );
  if (!start.enabled) {
    showBanner(start.reason ?? "camera unavailable", "info");
    el<HTMLInputElement>("mode-browse").checked = true;
    session = switchMode(session, "browse", activeLoop);
    return;
  }
  activeLoop = start.loop;
}

function leaveRealtime(): void {
  session = switchMode(session, "browse", activeLoop);
  activeLoop = null;
  if (mediaStream) {
    for (const track of mediaStream.getTracks()) track.stop();
    mediaStream = null;
  }
}

async function setMode(next: Mode): Promise<void> {
  if (next === session.mode) return;
  leaveRealtime();
  session = switchMode(session, next, activeLoop);
  el<HTMLDivElement>("browse-panel").hidden = next !== "browse";
  el<HTMLDivElement>("realtime-panel").hidden = next !== "realtime";
  if (next === "realtime") {
    await enterRealtime();
  }
}

async function refreshLabels(): Promise<void> {
  const stored = await client.getLabels();
  session = { ...session, labels: stored.labels, template: stored.hypothesis_template };
  el<HTMLInputElement>("label-input").value = stored.labels.join(", ");
  el<HTMLDivElement>("label-errors").textContent = "";
}

async function saveLabels(): Promise<void> {
  const proposed = parseLabelInput(el<HTMLInputElement>("label-input").value);
  const validation = validateLabels(proposed);
  const errorsNode = el<HTMLDivElement>("label-errors");
  if (!validation.ok) {
    errorsNode.textContent = validation.errors.join("; ");
    return;
  }
  const result = await submitLabels(client, session.labels, proposed);
  if (result.ok) {
    session = { ...session, labels: result.labels };
    errorsNode.textContent = "";
    el<HTMLInputElement>("label-input").value = result.labels.join(", ");
  } else {
    errorsNode.textContent = result.errors.join("; ");
  }
}

function wireUp(): void {
  el<HTMLInputElement>("file-input").addEventListener("change", (event) => {
    const input = event.target as HTMLInputElement;
    if (input.files && input.files[0]) void browseClassify(input.files[0]);
  });
  el<HTMLInputElement>("mode-browse").addEventListener("change", () => void setMode("browse"));
  el<HTMLInputElement>("mode-realtime").addEventListener("change", () => void setMode("realtime"));
  el<HTMLInputElement>("interval-input").addEventListener("change", (event) => {
    const ms = Number((event.target as HTMLInputElement).value);
    session = { ...session, captureIntervalMs: Math.max(250, Math.min(10_000, ms || 1500)) };
  });
  el<HTMLButtonElement>("save-labels").addEventListener("click", () => void saveLabels());
  el<HTMLButtonElement>("refresh-labels").addEventListener("click", () => void refreshLabels());
  el<HTMLDivElement>("banner").addEventListener("click", (event) => {
    (event.currentTarget as HTMLDivElement).hidden = true;
  });
  void refreshLabels().catch((err) => showBanner(describeError(err)));
}

wireUp();
