/** Label-set editing: client-side validation mirrors the service rules
 * (>= 2 labels, non-empty, case-insensitively distinct), so obviously bad
 * edits never reach the network.
 */

import type { DocpipeClient } from "./api.js";
import type { LabelsResponse } from "./types.js";

export interface LabelValidation {
  ok: boolean;
  cleaned: string[];
  errors: string[];
}

export function parseLabelInput(raw: string): string[] {
  return raw
    .split(/[,\n]/)
    .map((part) => part.trim())
    .filter((part) => part.length > 0);
}

export function validateLabels(labels: string[]): LabelValidation {
  const cleaned = labels.map((label) => label.trim());
  const errors: string[] = [];
  if (cleaned.some((label) => label.length === 0)) {
    errors.push("labels must be non-empty");
  }
  const nonEmpty = cleaned.filter((label) => label.length > 0);
  if (nonEmpty.length < 2) {
    errors.push("need at least 2 labels");
  }
  const lowered = nonEmpty.map((label) => label.toLowerCase());
  if (new Set(lowered).size !== lowered.length) {
    errors.push("labels must be distinct (case-insensitive)");
  }
  return { ok: errors.length === 0, cleaned: nonEmpty, errors };
}

export interface EditResult {
  ok: boolean;
  /** Stored value from the service when ok; unchanged mirror otherwise. */
  labels: string[];
  errors: string[];
}

/** Validate locally, then PUT; the caller's mirror only changes on 200. */
export async function submitLabels(
  client: DocpipeClient,
  currentMirror: string[],
  proposed: string[],
): Promise<EditResult> {
  const validation = validateLabels(proposed);
  if (!validation.ok) {
    return { ok: false, labels: currentMirror, errors: validation.errors };
  }
  try {
    const stored: LabelsResponse = await client.putLabels(validation.cleaned);
    return { ok: true, labels: stored.labels, errors: [] };
  } catch (err) {
    const message = err instanceof Error ? err.message : String(err);
    return { ok: false, labels: currentMirror, errors: [message] };
  }
}
