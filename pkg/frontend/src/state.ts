/** Editor state and its pure update functions.
 *
 * The UI never derives latents client-side: every preview comes from the
 * service, and overlapping responses are resolved by monotonically
 * increasing per-control sequence numbers (latest wins).
 */

import type { DirectionInfo, LatentRef } from "./api.js";

export interface Inversion {
  latentId: string;
  preview: string;
}

export interface EditorState {
  sessionId: string | null;
  directions: DirectionInfo[];
  latents: Inversion[];
  activeLatent: string | null;
  sliders: Record<string, number>;
  interpolation: { a: string | null; b: string | null; lambda: number };
  mixKeep: number;
  maxCodes: number;
  previewUrl: string | null;
  pending: boolean;
  error: string | null;
  /** last acknowledged edit sequence number per control */
  acked: Record<string, number>;
}

export function initialState(maxCodes: number): EditorState {
  return {
    sessionId: null,
    directions: [],
    latents: [],
    activeLatent: null,
    sliders: {},
    interpolation: { a: null, b: null, lambda: 0 },
    mixKeep: maxCodes,
    maxCodes,
    previewUrl: null,
    pending: false,
    error: null,
    acked: {},
  };
}

export function clamp(value: number, lo: number, hi: number): number {
  return Math.min(hi, Math.max(lo, value));
}

export function withDirections(s: EditorState, directions: DirectionInfo[]): EditorState {
  const sliders: Record<string, number> = {};
  for (const d of directions) sliders[d.name] = 0;
  return { ...s, directions, sliders };
}

export function withSession(s: EditorState, sessionId: string, latents: LatentRef[]): EditorState {
  return {
    ...s,
    sessionId,
    latents: latents.map((l) => ({ latentId: l.latent_id, preview: l.preview })),
  };
}

export function withInversion(s: EditorState, inv: LatentRef): EditorState {
  const entry = { latentId: inv.latent_id, preview: inv.preview };
  const sliders: Record<string, number> = {};
  for (const d of s.directions) sliders[d.name] = 0;
  return {
    ...s,
    latents: [...s.latents, entry],
    activeLatent: entry.latentId,
    previewUrl: entry.preview,
    sliders,
    error: null,
  };
}

export function withActiveLatent(s: EditorState, latentId: string): EditorState {
  const entry = s.latents.find((l) => l.latentId === latentId);
  if (!entry) return s;
  const sliders: Record<string, number> = {};
  for (const d of s.directions) sliders[d.name] = 0;
  return { ...s, activeLatent: latentId, previewUrl: entry.preview, sliders, error: null };
}

export function withSliderValue(s: EditorState, name: string, alpha: number): EditorState {
  const dir = s.directions.find((d) => d.name === name);
  if (!dir) return s;
  const clamped = clamp(alpha, dir.alpha_range[0], dir.alpha_range[1]);
  return { ...s, sliders: { ...s.sliders, [name]: clamped } };
}

export function withLambda(s: EditorState, lambda: number): EditorState {
  return { ...s, interpolation: { ...s.interpolation, lambda: clamp(lambda, 0, 1) } };
}

export function withMixKeep(s: EditorState, keep: number): EditorState {
  return { ...s, mixKeep: clamp(Math.round(keep), 0, s.maxCodes) };
}

/** Apply an edit response only if it is the newest for its control. */
export function withEditResult(
  s: EditorState,
  control: string,
  seq: number,
  preview: string,
): EditorState {
  const last = s.acked[control] ?? -1;
  if (seq <= last) return s; // stale response: discard
  return {
    ...s,
    acked: { ...s.acked, [control]: seq },
    previewUrl: preview,
    pending: false,
    error: null,
  };
}

export function withPending(s: EditorState, pending: boolean): EditorState {
  return { ...s, pending };
}

/** Service errors surface as a non-blocking notice; everything else stays. */
export function withError(s: EditorState, message: string): EditorState {
  return { ...s, error: message, pending: false };
}

export function clearError(s: EditorState): EditorState {
  return { ...s, error: null };
}
