import { ApiClient, SegmentResponse, SessionInfo } from "./api.js";

export type OverlayMode = "mask" | "heatmap" | "both";

export interface UiState {
  session: SessionInfo | null;
  point: { x: number; y: number } | null;
  threshold: number;
  overlayMode: OverlayMode;
  lastResponse: SegmentResponse | null;
  banner: string | null;
}

export interface ControllerStats {
  issued: number;
  applied: number;
  discardedStale: number;
  maxInFlight: number;
}

/**
 * Drives the upload / click / threshold loop.
 *
 * Request discipline: at most one segment request in flight; while one is
 * pending, newer parameters coalesce into a single follow-up. Responses carry
 * their issue sequence number and only the newest ever applies, so a stale
 * response can never overwrite a fresher overlay. The threshold slider is
 * debounced.
 */
export class SegmentController {
  state: UiState = {
    session: null,
    point: null,
    threshold: 0.5,
    overlayMode: "both",
    lastResponse: null,
    banner: null,
  };

  stats: ControllerStats = { issued: 0, applied: 0, discardedStale: 0, maxInFlight: 0 };

  private nextSeq = 0;
  private appliedSeq = 0;
  private inFlight = 0;
  private pendingParams: { x: number; y: number; threshold: number } | null = null;
  private debounceHandle: ReturnType<typeof setTimeout> | null = null;

  constructor(
    private api: ApiClient,
    private onUpdate: (state: UiState) => void = () => {},
    private debounceMs: number = 150,
  ) {}

  async uploadImage(payload: Blob | ArrayBuffer | Uint8Array): Promise<SessionInfo> {
    this.state.point = null;
    this.state.lastResponse = null;
    this.state.banner = null;
    try {
      this.state.session = await this.api.createSession(payload);
    } catch (err) {
      this.state.banner = err instanceof Error ? err.message : String(err);
      this.onUpdate(this.state);
      throw err;
    }
    this.onUpdate(this.state);
    return this.state.session;
  }

  /** Click at image-pixel coordinates: issue immediately. */
  clickAt(x: number, y: number): Promise<void> {
    if (!this.state.session) {
      this.state.banner = "upload an image first";
      this.onUpdate(this.state);
      return Promise.resolve();
    }
    this.state.point = { x, y };
    return this.requestSegment();
  }

  /** Slider movement: debounced re-request with the new threshold. */
  setThreshold(threshold: number): void {
    this.state.threshold = threshold;
    this.onUpdate(this.state);
    if (!this.state.point) {
      return;
    }
    if (this.debounceHandle !== null) {
      clearTimeout(this.debounceHandle);
    }
    this.debounceHandle = setTimeout(() => {
      this.debounceHandle = null;
      void this.requestSegment();
    }, this.debounceMs);
  }

  setOverlayMode(mode: OverlayMode): void {
    this.state.overlayMode = mode;
    this.onUpdate(this.state);
  }

  private requestSegment(): Promise<void> {
    const { session, point } = this.state;
    if (!session || !point) {
      return Promise.resolve();
    }
    const params = { x: point.x, y: point.y, threshold: this.state.threshold };
    if (this.inFlight > 0) {
      this.pendingParams = params; // coalesce: keep only the newest
      return Promise.resolve();
    }
    return this.issue(params);
  }

  private async issue(params: { x: number; y: number; threshold: number }): Promise<void> {
    const seq = ++this.nextSeq;
    this.stats.issued += 1;
    this.inFlight += 1;
    this.stats.maxInFlight = Math.max(this.stats.maxInFlight, this.inFlight);
    try {
      const resp = await this.api.segment({
        session_id: this.state.session!.session_id,
        ...params,
      });
      if (seq > this.appliedSeq) {
        this.appliedSeq = seq;
        this.state.lastResponse = resp;
        this.state.banner = null;
        this.stats.applied += 1;
        this.onUpdate(this.state);
      } else {
        this.stats.discardedStale += 1;
      }
    } catch (err) {
      this.state.banner = err instanceof Error ? err.message : String(err);
      this.onUpdate(this.state);
    } finally {
      this.inFlight -= 1;
      const pending = this.pendingParams;
      this.pendingParams = null;
      if (pending) {
        void this.issue(pending);
      }
    }
  }
}
