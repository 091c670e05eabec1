/** Dashboard controller: catalogs, job creation, 1 s coalesced polling,
 * progress, previews, result link. Holds no DOM — the page binds to it
 * and re-renders on change — so the same flow runs headless in tests.
 *
 * Displayed job state is always a string the API returned; API errors are
 * surfaced verbatim with the job-state context attached. */

import { ApiError, type AdvertInfo, type JobStatus, type ServiceClient, type VideoInfo } from "./api.js";
import { CornerEditState } from "./editor.js";
import type { ViewTransform } from "./geometry.js";

export interface DashboardOptions {
  pollIntervalMs?: number;
  editorView?: ViewTransform;
  onChange?: () => void;
}

export class DashboardController {
  videos: VideoInfo[] = [];
  adverts: AdvertInfo[] = [];
  jobId: string | null = null;
  job: JobStatus | null = null;
  editor: CornerEditState | null = null;
  /** Connection-level failure banner (service unreachable). */
  connectionBanner: string | null = null;
  /** Last API error, verbatim from the server, with state context. */
  apiError: string | null = null;

  private readonly pollIntervalMs: number;
  private readonly editorView: ViewTransform;
  private readonly onChange: () => void;
  private timer: ReturnType<typeof setInterval> | null = null;
  private pollInFlight = false;
  private pollSeq = 0;

  constructor(
    readonly client: ServiceClient,
    options: DashboardOptions = {},
  ) {
    this.pollIntervalMs = options.pollIntervalMs ?? 1000;
    this.editorView = options.editorView ?? { zoom: 1, panX: 0, panY: 0 };
    this.onChange = options.onChange ?? (() => {});
  }

  /** 0..100 for the progress bar. */
  get progressPercent(): number {
    return this.job === null ? 0 : Math.round(this.job.progress * 100);
  }

  /** Frame indices with rendered output, for the preview strip. */
  previewFrameIndices(limit = 8): number[] {
    const report = this.job?.report;
    if (!report) {
      return [];
    }
    const rendered = report.frames
      .filter((f) => f.status === "rendered")
      .map((f) => f.frame_index);
    if (rendered.length <= limit) {
      return rendered;
    }
    const step = (rendered.length - 1) / (limit - 1);
    return Array.from({ length: limit }, (_, i) => rendered[Math.round(i * step)]!);
  }

  resultUrl(): string | null {
    return this.job?.state === "done" && this.jobId !== null
      ? this.client.resultUrl(this.jobId)
      : null;
  }

  async loadCatalogs(): Promise<void> {
    try {
      [this.videos, this.adverts] = await Promise.all([
        this.client.listVideos(),
        this.client.listAdverts(),
      ]);
      this.connectionBanner = null;
    } catch (err) {
      this.surface(err);
    }
    this.onChange();
  }

  async createJob(videoId: string, advertId: string): Promise<void> {
    try {
      const { id } = await this.client.createJob({ video: videoId, advert: advertId });
      this.jobId = id;
      this.job = null;
      this.editor = null;
      this.apiError = null;
      await this.pollOnce();
      this.startPolling();
    } catch (err) {
      this.surface(err);
    }
    this.onChange();
  }

  /** One coalesced status poll: skipped while another is in flight, and
   * stale responses (an older poll resolving late) are dropped. */
  async pollOnce(): Promise<void> {
    if (this.jobId === null || this.pollInFlight) {
      return;
    }
    this.pollInFlight = true;
    const seq = ++this.pollSeq;
    try {
      const job = await this.client.getJob(this.jobId);
      if (seq !== this.pollSeq) {
        return;
      }
      this.job = job;
      this.connectionBanner = null;
      if (
        this.editor === null &&
        job.state === "detected" &&
        job.detected_corners !== null &&
        job.keyframe_index !== null
      ) {
        this.editor = new CornerEditState(job.keyframe_index, job.detected_corners, {
          ...this.editorView,
        });
      }
      if (job.state === "done" || job.state === "failed") {
        this.stopPolling();
      }
    } catch (err) {
      this.surface(err);
    } finally {
      this.pollInFlight = false;
      this.onChange();
    }
  }

  startPolling(): void {
    if (this.timer !== null) {
      return;
    }
    this.timer = setInterval(() => {
      void this.pollOnce();
    }, this.pollIntervalMs);
  }

  stopPolling(): void {
    if (this.timer !== null) {
      clearInterval(this.timer);
      this.timer = null;
    }
  }

  /** Submit the editor's corners (displayed positions, verbatim). */
  async confirmCorners(): Promise<boolean> {
    if (this.editor === null || this.jobId === null) {
      return false;
    }
    try {
      const sent = await this.editor.submit(this.client, this.jobId);
      if (sent) {
        this.apiError = null;
        await this.refresh();
      }
      return sent;
    } catch (err) {
      this.surface(err);
      return false;
    } finally {
      this.onChange();
    }
  }

  async startRender(): Promise<boolean> {
    if (this.jobId === null) {
      return false;
    }
    try {
      await this.client.startRender(this.jobId);
      this.apiError = null;
      await this.refresh();
      this.startPolling();
      return true;
    } catch (err) {
      this.surface(err);
      return false;
    } finally {
      this.onChange();
    }
  }

  /** Immediate un-coalesced refresh after a state-changing call. */
  private async refresh(): Promise<void> {
    if (this.jobId === null) {
      return;
    }
    try {
      this.job = await this.client.getJob(this.jobId);
    } catch (err) {
      this.surface(err);
    }
  }

  private surface(err: unknown): void {
    if (err instanceof ApiError) {
      const context = this.job === null ? "" : ` (job state: ${this.job.state})`;
      this.apiError = `${err.status}: ${err.detail}${context}`;
    } else {
      const message = err instanceof Error ? err.message : String(err);
      this.connectionBanner = `service unreachable: ${message}`;
    }
  }
}
