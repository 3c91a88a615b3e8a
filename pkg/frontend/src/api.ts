export interface SessionInfo {
  session_id: string;
  width: number;
  height: number;
  grid: [number, number];
  resolution: number;
}

export interface SegmentRequest {
  session_id: string;
  x: number;
  y: number;
  threshold: number;
}

export interface SegmentResponse {
  mask_rle: number[];
  grid: [number, number];
  heatmap: number[][];
  threshold: number;
  query_patch: [number, number];
  timing_ms: number;
}

export interface HealthInfo {
  status: string;
  checkpoint_hash: string;
  resolution: number;
  patch_size: number;
}

export type FetchLike = (url: string, init?: RequestInit) => Promise<Response>;

/** Thin JSON client for the segmentation service. */
export class ApiClient {
  constructor(
    private baseUrl: string = "",
    private fetchFn: FetchLike = (...args) => fetch(...args),
  ) {}

  async createSession(payload: Blob | ArrayBuffer | Uint8Array): Promise<SessionInfo> {
    const body = payload instanceof Uint8Array
      ? payload.slice().buffer as ArrayBuffer
      : payload;
    const resp = await this.fetchFn(`${this.baseUrl}/session`, {
      method: "POST",
      body,
    });
    if (!resp.ok) {
      throw new Error(await errorDetail(resp, "upload failed"));
    }
    return (await resp.json()) as SessionInfo;
  }

  async segment(req: SegmentRequest): Promise<SegmentResponse> {
    const resp = await this.fetchFn(`${this.baseUrl}/segment`, {
      method: "POST",
      headers: { "Content-Type": "application/json" },
      body: JSON.stringify(req),
    });
    if (!resp.ok) {
      throw new Error(await errorDetail(resp, "segmentation failed"));
    }
    return (await resp.json()) as SegmentResponse;
  }

  async health(): Promise<HealthInfo> {
    const resp = await this.fetchFn(`${this.baseUrl}/health`);
    if (!resp.ok) {
      throw new Error("service unavailable");
    }
    return (await resp.json()) as HealthInfo;
  }
}

async function errorDetail(resp: Response, fallback: string): Promise<string> {
  try {
    const body = await resp.json();
    return body.error ?? fallback;
  } catch {
    return `${fallback} (HTTP ${resp.status})`;
  }
}
