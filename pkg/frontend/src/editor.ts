/** Corner-handle editing state for the keyframe overlay.
 *
 * What you see is what you send: handle positions are kept in image
 * coordinates, drags arrive in screen coordinates and are mapped through
 * the inverse of the current zoom/pan, and the POST body contains the
 * displayed positions verbatim. */

import type { Corners, ServiceClient } from "./api.js";
import {
  imageToScreen,
  isConvexQuad,
  type Point,
  screenToImage,
  type ViewTransform,
} from "./geometry.js";

export class CornerEditState {
  /** Handle positions in image coordinates (the edited quad). */
  handles: Corners;
  activeHandle: number | null = null;
  view: ViewTransform;
  private inFlight = false;

  constructor(
    readonly keyframeIndex: number,
    readonly detected: Corners,
    view: ViewTransform = { zoom: 1, panX: 0, panY: 0 },
  ) {
    this.handles = detected.map((c) => [c[0], c[1]] as [number, number]);
    this.view = view;
  }

  /** Handle positions in screen coordinates, for rendering the overlay. */
  screenHandles(): Point[] {
    return this.handles.map((c) => imageToScreen(this.view, c as Point));
  }

  beginDrag(handleIndex: number): void {
    if (handleIndex < 0 || handleIndex >= this.handles.length) {
      throw new RangeError(`no handle ${handleIndex}`);
    }
    this.activeHandle = handleIndex;
  }

  /** Move the active handle to an absolute screen position. */
  dragTo(screenX: number, screenY: number): void {
    if (this.activeHandle === null) {
      return;
    }
    this.handles[this.activeHandle] = screenToImage(this.view, [screenX, screenY]);
  }

  /** Move the active handle by a screen-space delta (image delta = screen
   * delta divided by zoom). */
  dragBy(screenDx: number, screenDy: number): void {
    if (this.activeHandle === null) {
      return;
    }
    const handle = this.handles[this.activeHandle]!;
    this.handles[this.activeHandle] = [
      handle[0] + screenDx / this.view.zoom,
      handle[1] + screenDy / this.view.zoom,
    ];
  }

  endDrag(): void {
    this.activeHandle = null;
  }

  /** Discard edits, back to the detected quad. */
  reset(): void {
    this.handles = this.detected.map((c) => [c[0], c[1]] as [number, number]);
  }

  isConvex(): boolean {
    return isConvexQuad(this.handles);
  }

  /** Submission gate: blocked while a POST is in flight or the quad is
   * non-convex. */
  get submitEnabled(): boolean {
    return !this.inFlight && this.isConvex();
  }

  /** Inline message explaining a blocked submit, or null when allowed. */
  get blockedMessage(): string | null {
    if (!this.isConvex()) {
      return "corners must form a convex quad — drag a handle to fix the crossing";
    }
    if (this.inFlight) {
      return "submitting…";
    }
    return null;
  }

  /** The POST body: displayed handle positions, verbatim. */
  submitBody(): { frame: number; corners: Corners } {
    return {
      frame: this.keyframeIndex,
      corners: this.handles.map((c) => [c[0], c[1]] as [number, number]),
    };
  }

  /** At most one in-flight submission; resolves false when blocked. */
  async submit(client: ServiceClient, jobId: string): Promise<boolean> {
    if (!this.submitEnabled) {
      return false;
    }
    this.inFlight = true;
    try {
      const body = this.submitBody();
      await client.confirmCorners(jobId, body.frame, body.corners);
      return true;
    } finally {
      this.inFlight = false;
    }
  }
}
