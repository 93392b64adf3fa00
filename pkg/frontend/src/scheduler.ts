/** Debounced, latest-wins request scheduling for slider-rate controls.
 *
 * Each control keeps one trailing-edge debounce timer (150 ms) and a
 * monotonically increasing sequence number. At most one request per control
 * is in flight; when a burst of positions arrives, only the newest position
 * is sent once the window closes, and superseded schedules resolve to null.
 */

export const DEBOUNCE_MS = 150;

export type ScheduledOutcome<T> =
  | { ok: true; seq: number; value: T }
  | { ok: false; seq: number; error: unknown };

type Task<T> = () => Promise<T>;

interface Pending {
  task: Task<unknown>;
  resolve: (r: ScheduledOutcome<unknown> | null) => void;
}

interface ControlState {
  timer: ReturnType<typeof setTimeout> | null;
  pending: Pending | null;
  seq: number;
  inFlight: boolean;
}

export class ControlScheduler {
  private controls = new Map<string, ControlState>();

  constructor(private readonly debounceMs: number = DEBOUNCE_MS) {}

  private control(name: string): ControlState {
    let c = this.controls.get(name);
    if (!c) {
      c = { timer: null, pending: null, seq: 0, inFlight: false };
      this.controls.set(name, c);
    }
    return c;
  }

  /** Latest sequence number issued for a control. */
  seqOf(name: string): number {
    return this.control(name).seq;
  }

  /**
   * Schedule a task for a control. An earlier unsent task for the same
   * control resolves to null (superseded); the survivor resolves with its
   * result tagged by a fresh sequence number once the debounce window
   * closes and no older request is still in flight.
   */
  schedule<T>(name: string, task: Task<T>): Promise<ScheduledOutcome<T> | null> {
    const c = this.control(name);
    if (c.timer !== null) clearTimeout(c.timer);
    if (c.pending !== null) c.pending.resolve(null);

    return new Promise((resolve) => {
      const pending: Pending = {
        task: task as Task<unknown>,
        resolve: resolve as Pending["resolve"],
      };
      c.pending = pending;
      const fire = async () => {
        c.timer = null;
        if (c.pending !== pending) return; // replaced; already resolved null
        if (c.inFlight) {
          c.timer = setTimeout(fire, this.debounceMs);
          return;
        }
        c.pending = null;
        c.seq += 1;
        const seq = c.seq;
        c.inFlight = true;
        try {
          const value = await task();
          resolve({ ok: true, seq, value });
        } catch (error) {
          resolve({ ok: false, seq, error });
        } finally {
          c.inFlight = false;
        }
      };
      c.timer = setTimeout(fire, this.debounceMs);
    });
  }
}
