import { afterEach, beforeEach, describe, expect, it, vi } from "vitest";

import { CaptureLoop, startRealtimeMode, switchMode } from "../src/realtime.js";
import { createSession, type ClassifyResponse } from "../src/types.js";

const RESPONSE: ClassifyResponse = {
  chosen: "Invoice",
  label_probs: { Invoice: 0.7, Report: 0.1, Letter: 0.1, Form: 0.1 },
  regions: [{ polygon: [0, 0, 10, 0, 10, 10, 0, 10], score: 0.9 }],
  timing_ms: { total: 12 },
};

function fakeFrame(): Promise<Blob> {
  return Promise.resolve(new Blob([new Uint8Array([1, 2, 3])], { type: "image/jpeg" }));
}

describe("CaptureLoop", () => {
  beforeEach(() => {
    vi.useFakeTimers();
  });
  afterEach(() => {
    vi.useRealTimers();
  });

  it("sends 10 ± 1 requests in 15 s at the default 1500 ms interval", async () => {
    const results: ClassifyResponse[] = [];
    const loop = new CaptureLoop({
      captureFrame: fakeFrame,
      classify: async () => RESPONSE,
      onResult: (r) => results.push(r),
    });
    loop.start();
    await vi.advanceTimersByTimeAsync(15_000);
    loop.stop();
    expect(loop.requestsSent).toBeGreaterThanOrEqual(9);
    expect(loop.requestsSent).toBeLessThanOrEqual(11);
    expect(results.length).toBe(loop.requestsSent);
    expect(loop.maxInFlightSeen).toBe(1);
  });

  it("never overlaps requests when the service is slower than the interval", async () => {
    const loop = new CaptureLoop({
      captureFrame: fakeFrame,
      classify: () =>
        new Promise<ClassifyResponse>((resolve) => {
          setTimeout(() => resolve(RESPONSE), 3_000);
        }),
      onResult: () => undefined,
    });
    loop.start();
    await vi.advanceTimersByTimeAsync(15_000);
    loop.stop();
    expect(loop.maxInFlightSeen).toBe(1);
    expect(loop.framesSkipped).toBeGreaterThan(0);
    expect(loop.requestsSent + loop.framesSkipped).toBe(10);
  });

  it("skips frames instead of queueing them", async () => {
    let resolveFirst: ((r: ClassifyResponse) => void) | null = null;
    const calls: number[] = [];
    const loop = new CaptureLoop({
      captureFrame: fakeFrame,
      classify: () =>
        new Promise<ClassifyResponse>((resolve) => {
          calls.push(Date.now());
          if (!resolveFirst) resolveFirst = resolve;
          else resolve(RESPONSE);
        }),
      onResult: () => undefined,
    });
    loop.start();
    await vi.advanceTimersByTimeAsync(6_000); // 4 ticks; first request still hanging
    expect(calls.length).toBe(1);
    expect(loop.framesSkipped).toBe(3);
    resolveFirst!(RESPONSE);
    await vi.advanceTimersByTimeAsync(1_500);
    expect(calls.length).toBe(2);
    loop.stop();
  });

  it("keeps running through transient errors and reports them", async () => {
    const errors: unknown[] = [];
    let attempts = 0;
    const loop = new CaptureLoop({
      captureFrame: fakeFrame,
      classify: async () => {
        attempts += 1;
        if (attempts <= 2) throw new Error("service hiccup");
        return RESPONSE;
      },
      onResult: () => undefined,
      onError: (err) => errors.push(err),
    });
    loop.start();
    await vi.advanceTimersByTimeAsync(6_000);
    loop.stop();
    expect(errors.length).toBe(2);
    expect(attempts).toBe(4);
  });

  it("ticks the capture indicator for sent and skipped frames", async () => {
    const ticks: boolean[] = [];
    const loop = new CaptureLoop({
      captureFrame: fakeFrame,
      classify: () =>
        new Promise<ClassifyResponse>((resolve) => {
          setTimeout(() => resolve(RESPONSE), 2_000);
        }),
      onResult: () => undefined,
      onTick: (info) => ticks.push(info.sent),
    });
    loop.start();
    await vi.advanceTimersByTimeAsync(4_500);
    loop.stop();
    expect(ticks).toEqual([true, false, true]);
  });

  it("clamps the interval to the 250 ms floor", () => {
    const loop = new CaptureLoop(
      { captureFrame: fakeFrame, classify: async () => RESPONSE, onResult: () => undefined },
      50,
    );
    expect(loop.intervalMs).toBe(250);
  });

  it("start is idempotent and stop halts the timer", async () => {
    const loop = new CaptureLoop({
      captureFrame: fakeFrame,
      classify: async () => RESPONSE,
      onResult: () => undefined,
    });
    loop.start();
    loop.start();
    await vi.advanceTimersByTimeAsync(3_000);
    expect(loop.requestsSent).toBe(2);
    loop.stop();
    await vi.advanceTimersByTimeAsync(6_000);
    expect(loop.requestsSent).toBe(2);
  });
});

describe("startRealtimeMode", () => {
  beforeEach(() => {
    vi.useFakeTimers();
  });
  afterEach(() => {
    vi.useRealTimers();
  });

  it("camera denial disables the mode and issues no network requests", async () => {
    let classifyCalls = 0;
    const start = await startRealtimeMode(
      () => Promise.reject(new Error("NotAllowedError")),
      {
        captureFrame: fakeFrame,
        classify: async () => {
          classifyCalls += 1;
          return RESPONSE;
        },
        onResult: () => undefined,
      },
    );
    await vi.advanceTimersByTimeAsync(10_000);
    expect(start.enabled).toBe(false);
    expect(start.loop).toBeNull();
    expect(start.reason).toMatch(/camera/i);
    expect(classifyCalls).toBe(0);
  });

  it("camera grant starts the loop", async () => {
    const start = await startRealtimeMode(async () => ({}), {
      captureFrame: fakeFrame,
      classify: async () => RESPONSE,
      onResult: () => undefined,
    });
    expect(start.enabled).toBe(true);
    expect(start.loop?.running).toBe(true);
    await vi.advanceTimersByTimeAsync(3_000);
    expect(start.loop?.requestsSent).toBe(2);
    start.loop?.stop();
  });
});

describe("switchMode", () => {
  it("stops an active capture loop before switching", () => {
    vi.useFakeTimers();
    const loop = new CaptureLoop({
      captureFrame: fakeFrame,
      classify: async () => RESPONSE,
      onResult: () => undefined,
    });
    loop.start();
    const session = switchMode({ ...createSession(), mode: "realtime" }, "browse", loop);
    expect(loop.running).toBe(false);
    expect(session.mode).toBe("browse");
    vi.useRealTimers();
  });
});
