/** Typed client for the render-job HTTP service. Pure API consumer: no
 * engine logic lives in the browser; the server stays authoritative. */

export type Corners = [number, number][];

export interface VideoInfo {
  id: string;
  name: string;
  width: number;
  height: number;
  frame_count: number;
}

export interface AdvertInfo {
  id: string;
  name: string;
  width: number;
  height: number;
}

export interface ReportFrame {
  frame_index: number;
  status: string;
  corners: Corners | null;
  alive_features: number;
  max_inlier_error: number;
  blend_residual: number;
}

export interface RenderReport {
  keyframe_index: number;
  frames_rendered: number;
  termination: string;
  frames: ReportFrame[];
}

export interface JobStatus {
  id: string;
  state: string;
  video: string;
  advert: string;
  keyframe_index: number | null;
  detected_corners: Corners | null;
  confirmed_frame: number | null;
  confirmed_corners: Corners | null;
  progress: number;
  frame_count: number;
  width: number;
  height: number;
  error: string | null;
  report: RenderReport | null;
}

export interface DetectorOptions {
  color?: [number, number, number];
  sigma?: number;
}

export interface CreateJobRequest {
  video: string;
  advert: string;
  detector?: DetectorOptions;
  stride?: number;
  recognition_cutoff?: number;
  threshold?: number;
  min_area?: number;
}

export interface BlendOptions {
  mode?: string;
  solver_tolerance?: number;
  max_iterations?: number;
}

export interface RenderOptions {
  blend?: BlendOptions;
}

/** An HTTP error response, carrying the server's verbatim detail string. */
export class ApiError extends Error {
  constructor(
    readonly status: number,
    readonly detail: string,
  ) {
    super(`${status}: ${detail}`);
    this.name = "ApiError";
  }
}

export class ServiceClient {
  constructor(readonly baseUrl: string) {}

  private async request<T>(method: string, path: string, body?: unknown): Promise<T> {
    const init: RequestInit = { method };
    if (body !== undefined) {
      init.headers = { "Content-Type": "application/json" };
      init.body = JSON.stringify(body);
    }
    const response = await fetch(this.baseUrl + path, init);
    if (!response.ok) {
      let detail = response.statusText;
      try {
        const payload = (await response.json()) as { detail?: unknown };
        if (typeof payload.detail === "string") {
          detail = payload.detail;
        } else if (payload.detail !== undefined) {
          detail = JSON.stringify(payload.detail);
        }
      } catch {
        // non-JSON error body: keep the status text
      }
      throw new ApiError(response.status, detail);
    }
    return (await response.json()) as T;
  }

  listVideos(): Promise<VideoInfo[]> {
    return this.request("GET", "/videos");
  }

  listAdverts(): Promise<AdvertInfo[]> {
    return this.request("GET", "/adverts");
  }

  createJob(request: CreateJobRequest): Promise<{ id: string }> {
    return this.request("POST", "/jobs", request);
  }

  getJob(jobId: string): Promise<JobStatus> {
    return this.request("GET", `/jobs/${jobId}`);
  }

  confirmCorners(jobId: string, frame: number, corners: Corners): Promise<unknown> {
    return this.request("POST", `/jobs/${jobId}/corners`, { frame, corners });
  }

  startRender(jobId: string, options: RenderOptions = {}): Promise<unknown> {
    return this.request("POST", `/jobs/${jobId}/render`, options);
  }

  /** Rendered-frame preview (PNG). */
  previewUrl(jobId: string, frameIndex: number): string {
    return `${this.baseUrl}/jobs/${jobId}/frames/${frameIndex}`;
  }

  /** Finished video (Y4M download). */
  resultUrl(jobId: string): string {
    return `${this.baseUrl}/jobs/${jobId}/result`;
  }
}
