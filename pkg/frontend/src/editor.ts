/** Controller wiring the API client, editor state and request scheduling.
 *
 * All latent derivations go through the service; the controller only
 * tracks ids, previews and control positions.
 */

import { ApiError, type EditorApi, type EditParams } from "./api.js";
import { ControlScheduler } from "./scheduler.js";
import {
  type EditorState,
  initialState,
  withActiveLatent,
  withDirections,
  withEditResult,
  withError,
  withInversion,
  withLambda,
  withMixKeep,
  withPending,
  withSession,
  withSliderValue,
} from "./state.js";

export type Listener = (s: EditorState) => void;

export class Editor {
  private state: EditorState;
  private listeners: Listener[] = [];
  private scheduler: ControlScheduler;

  constructor(
    private readonly api: EditorApi,
    maxCodes: number,
    debounceMs?: number,
  ) {
    this.state = initialState(maxCodes);
    this.scheduler = new ControlScheduler(debounceMs);
  }

  getState(): EditorState {
    return this.state;
  }

  subscribe(fn: Listener): () => void {
    this.listeners.push(fn);
    return () => {
      this.listeners = this.listeners.filter((l) => l !== fn);
    };
  }

  private set(next: EditorState): void {
    this.state = next;
    for (const fn of this.listeners) fn(next);
  }

  /** Create a session (or restore one) and load the direction list. */
  async start(existingSessionId?: string): Promise<void> {
    const directions = await this.api.listDirections();
    this.set(withDirections(this.state, directions));
    if (existingSessionId) {
      try {
        const info = await this.api.getSession(existingSessionId);
        this.set(withSession(this.state, info.session_id, info.latents));
        return;
      } catch {
        // expired or unknown: fall through to a fresh session
      }
    }
    const sid = await this.api.createSession();
    this.set(withSession(this.state, sid, []));
  }

  async upload(image: Blob, stages: number): Promise<void> {
    if (!this.state.sessionId) throw new Error("no session");
    this.set(withPending(this.state, true));
    try {
      const inv = await this.api.invert(this.state.sessionId, image, stages);
      this.set(withPending(withInversion(this.state, inv), false));
    } catch (err) {
      this.set(withError(this.state, describe(err)));
    }
  }

  selectLatent(latentId: string): void {
    this.set(withActiveLatent(this.state, latentId));
  }

  /** Debounced direction slider; stale responses are discarded. */
  onSliderChange(direction: string, alpha: number): Promise<void> {
    this.set(withSliderValue(this.state, direction, alpha));
    const latent = this.state.activeLatent;
    if (!latent || !this.state.sessionId) return Promise.resolve();
    const applied = this.state.sliders[direction];
    return this.runEdit(`slider:${direction}`, latent, {
      op: "direction",
      params: { name: direction, alpha: applied },
    });
  }

  /** Interpolation slider between two inverted latents. */
  onInterpolationChange(latentA: string, latentB: string, lambda: number): Promise<void> {
    this.set(withLambda(this.state, lambda));
    if (!this.state.sessionId) return Promise.resolve();
    return this.runEdit("interpolate", latentA, {
      op: "interpolate",
      params: { other_latent_id: latentB, lam: this.state.interpolation.lambda },
    });
  }

  /** Style-mix layer cut against a style latent. */
  onMixChange(contentLatent: string, styleLatent: string, keep: number): Promise<void> {
    this.set(withMixKeep(this.state, keep));
    if (!this.state.sessionId) return Promise.resolve();
    return this.runEdit("mix", contentLatent, {
      op: "mix",
      params: { style_latent_id: styleLatent, keep: this.state.mixKeep },
    });
  }

  private async runEdit(control: string, latentId: string, edit: EditParams): Promise<void> {
    const sessionId = this.state.sessionId!;
    this.set(withPending(this.state, true));
    const outcome = await this.scheduler.schedule(control, () =>
      this.api.edit(sessionId, latentId, edit),
    );
    if (outcome === null) return; // superseded by a newer position
    if (!outcome.ok) {
      this.set(withError(this.state, describe(outcome.error)));
      return;
    }
    this.set(withEditResult(this.state, control, outcome.seq, outcome.value.preview));
  }
}

function describe(err: unknown): string {
  if (err instanceof ApiError) return `service error ${err.status}: ${err.message}`;
  return err instanceof Error ? err.message : String(err);
}
