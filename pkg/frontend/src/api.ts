/** Typed client for the editing service HTTP+JSON API. */

export interface DirectionInfo {
  name: string;
  alpha_range: [number, number];
}

export interface LatentRef {
  latent_id: string;
  preview: string;
}

export interface InvertResponse extends LatentRef {
  session_id: string;
}

export interface SessionInfo {
  session_id: string;
  latents: LatentRef[];
}

export type EditParams =
  | { op: "direction"; params: { name: string; alpha: number } }
  | { op: "interpolate"; params: { other_latent_id: string; lam: number } }
  | { op: "mix"; params: { style_latent_id: string; keep: number } };

export class ApiError extends Error {
  constructor(
    public readonly status: number,
    public readonly code: string,
    message: string,
  ) {
    super(message);
  }
}

export interface EditorApi {
  createSession(): Promise<string>;
  getSession(sessionId: string): Promise<SessionInfo>;
  invert(sessionId: string, image: Blob, stages: number): Promise<InvertResponse>;
  edit(sessionId: string, latentId: string, edit: EditParams): Promise<LatentRef>;
  listDirections(): Promise<DirectionInfo[]>;
}

type FetchLike = typeof fetch;

async function asJson<T>(response: Response): Promise<T> {
  if (!response.ok) {
    let code = "http_error";
    let message = `${response.status}`;
    try {
      const body = (await response.json()) as { code?: string; message?: string };
      code = body.code ?? code;
      message = body.message ?? message;
    } catch {
      // non-JSON error body; keep the status text
    }
    throw new ApiError(response.status, code, message);
  }
  return (await response.json()) as T;
}

export class HttpEditorApi implements EditorApi {
  constructor(
    private readonly base: string = "",
    private readonly fetchFn: FetchLike = fetch.bind(globalThis),
  ) {}

  async createSession(): Promise<string> {
    const r = await this.fetchFn(`${this.base}/api/sessions`, { method: "POST" });
    const body = await asJson<{ session_id: string }>(r);
    return body.session_id;
  }

  async getSession(sessionId: string): Promise<SessionInfo> {
    const r = await this.fetchFn(`${this.base}/api/sessions/${sessionId}`);
    return asJson<SessionInfo>(r);
  }

  async invert(sessionId: string, image: Blob, stages: number): Promise<InvertResponse> {
    const form = new FormData();
    form.append("image", image, "upload.png");
    form.append("stages", String(stages));
    const r = await this.fetchFn(`${this.base}/api/sessions/${sessionId}/invert`, {
      method: "POST",
      body: form,
    });
    return asJson<InvertResponse>(r);
  }

  async edit(sessionId: string, latentId: string, edit: EditParams): Promise<LatentRef> {
    const r = await this.fetchFn(`${this.base}/api/sessions/${sessionId}/edit`, {
      method: "POST",
      headers: { "Content-Type": "application/json" },
      body: JSON.stringify({ latent_id: latentId, ...edit }),
    });
    return asJson<LatentRef>(r);
  }

  async listDirections(): Promise<DirectionInfo[]> {
    const r = await this.fetchFn(`${this.base}/api/directions`);
    return asJson<DirectionInfo[]>(r);
  }
}
