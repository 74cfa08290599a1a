import { AnnotationIn, ClipInfo, FramesPayload, StoredAnnotation } from "./types";

export interface FieldError {
  field: string;
  message: string;
}

/** Server said no: validation failure or other HTTP error. */
export class ApiError extends Error {
  constructor(
    message: string,
    public status: number,
    public fieldErrors: FieldError[] = [],
  ) {
    super(message);
  }
}

/** The service is up but has no checkpoint loaded (distinct from network loss). */
export class NoModelError extends Error {}

/** Could not reach the service at all. */
export class NetworkError extends Error {}

async function parseError(response: Response): Promise<never> {
  let detail: unknown;
  try {
    detail = (await response.json()).detail;
  } catch {
    detail = response.statusText;
  }
  if (response.status === 503 && typeof detail === "string" && detail.includes("no model")) {
    throw new NoModelError(detail);
  }
  if (Array.isArray(detail)) {
    const fields = detail.filter(
      (d): d is FieldError => typeof d === "object" && d !== null && "field" in d,
    );
    throw new ApiError("validation failed", response.status, fields);
  }
  throw new ApiError(String(detail), response.status);
}

export class ApiClient {
  constructor(public baseUrl: string = "") {}

  private async request<T>(path: string, init?: RequestInit): Promise<T> {
    let response: Response;
    try {
      response = await fetch(this.baseUrl + path, init);
    } catch (e) {
      throw new NetworkError(String(e));
    }
    if (!response.ok) {
      await parseError(response);
    }
    return (await response.json()) as T;
  }

  listClips(): Promise<ClipInfo[]> {
    return this.request("/clips");
  }

  getFrames(clipId: string, fromS?: number, toS?: number): Promise<FramesPayload> {
    const params = new URLSearchParams();
    if (fromS !== undefined) params.set("from", String(fromS));
    if (toS !== undefined) params.set("to", String(toS));
    const query = params.size ? `?${params}` : "";
    return this.request(`/clips/${encodeURIComponent(clipId)}/frames${query}`);
  }

  listAnnotations(): Promise<StoredAnnotation[]> {
    return this.request("/annotations");
  }

  postAnnotation(record: AnnotationIn): Promise<{ id: number }> {
    return this.request("/annotations", {
      method: "POST",
      headers: { "Content-Type": "application/json" },
      body: JSON.stringify(record),
    });
  }

  generate(clipId: string, startS: number, endS: number): Promise<{ instruction: string }> {
    return this.request("/generate", {
      method: "POST",
      headers: { "Content-Type": "application/json" },
      body: JSON.stringify({ clip_id: clipId, start_s: startS, end_s: endS }),
    });
  }
}
