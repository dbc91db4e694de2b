/** Real-time capture loop: one frame every interval, freshest-frame
 * semantics. At most one request is ever in flight; when the service is
 * still busy at the next tick the frame is skipped, never queued.
 */

import {
  DEFAULT_CAPTURE_INTERVAL_MS,
  MIN_CAPTURE_INTERVAL_MS,
  type ClassifyResponse,
  type Mode,
  type UiSession,
} from "./types.js";

export interface TickInfo {
  /** false when the frame was skipped because a request was in flight */
  sent: boolean;
}

export interface CaptureLoopDeps {
  /** Grab the current camera frame, encoded as JPEG. */
  captureFrame: () => Promise<Blob>;
  /** Post one frame to the service. */
  classify: (frame: Blob) => Promise<ClassifyResponse>;
  onResult: (response: ClassifyResponse) => void;
  /** Transient failure: the indicator warns, the loop keeps running. */
  onError?: (err: unknown) => void;
  /** Capture indicator tick, once per timer firing. */
  onTick?: (info: TickInfo) => void;
}

export class CaptureLoop {
  readonly intervalMs: number;
  private deps: CaptureLoopDeps;
  private timer: ReturnType<typeof setInterval> | null = null;
  private inFlight = 0;

  // instrumentation used by the headless tests (and handy for debugging)
  requestsSent = 0;
  framesSkipped = 0;
  maxInFlightSeen = 0;

  constructor(deps: CaptureLoopDeps, intervalMs: number = DEFAULT_CAPTURE_INTERVAL_MS) {
    this.deps = deps;
    this.intervalMs = Math.max(MIN_CAPTURE_INTERVAL_MS, intervalMs);
  }

  get running(): boolean {
    return this.timer !== null;
  }

  start(): void {
    if (this.timer !== null) return;
    this.timer = setInterval(() => {
      void this.tick();
    }, this.intervalMs);
  }

  stop(): void {
    if (this.timer !== null) {
      clearInterval(this.timer);
      this.timer = null;
    }
  }

  private async tick(): Promise<void> {
    if (this.inFlight > 0) {
      this.framesSkipped += 1;
      this.deps.onTick?.({ sent: false });
      return;
    }
    this.inFlight += 1;
    this.maxInFlightSeen = Math.max(this.maxInFlightSeen, this.inFlight);
    this.requestsSent += 1;
    this.deps.onTick?.({ sent: true });
    try {
      const frame = await this.deps.captureFrame();
      const response = await this.deps.classify(frame);
      this.deps.onResult(response);
    } catch (err) {
      this.deps.onError?.(err);
    } finally {
      this.inFlight -= 1;
    }
  }
}

export interface RealtimeStart {
  enabled: boolean;
  loop: CaptureLoop | null;
  /** Instruction text when the camera was denied. */
  reason: string | null;
}

/** Enter real-time mode: without a camera the mode is disabled and no
 * network request is ever issued. */
export async function startRealtimeMode(
  requestCamera: () => Promise<unknown>,
  deps: CaptureLoopDeps,
  intervalMs: number = DEFAULT_CAPTURE_INTERVAL_MS,
): Promise<RealtimeStart> {
  try {
    await requestCamera();
  } catch {
    return {
      enabled: false,
      loop: null,
      reason: "Camera access was denied. Allow camera use in the browser and retry.",
    };
  }
  const loop = new CaptureLoop(deps, intervalMs);
  loop.start();
  return { enabled: true, loop, reason: null };
}

/** Mode transitions stop any active capture loop before switching. */
export function switchMode(session: UiSession, next: Mode, activeLoop: CaptureLoop | null): UiSession {
  if (activeLoop !== null) {
    activeLoop.stop();
  }
  return { ...session, mode: next };
}
