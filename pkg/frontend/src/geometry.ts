/** Screen/image coordinate transforms and the client-side convexity
 * pre-check. Mirrors the server's rule for UX only — the server remains
 * authoritative on submission. */

import type { Corners } from "./api.js";

export type Point = [number, number];

/** screen = image * zoom + pan */
export interface ViewTransform {
  zoom: number;
  panX: number;
  panY: number;
}

export function imageToScreen(view: ViewTransform, p: Point): Point {
  return [p[0] * view.zoom + view.panX, p[1] * view.zoom + view.panY];
}

export function screenToImage(view: ViewTransform, p: Point): Point {
  return [(p[0] - view.panX) / view.zoom, (p[1] - view.panY) / view.zoom];
}

/** True when the four corners form a strictly convex quad in either
 * winding order: every cross product of consecutive edges has the same
 * nonzero sign. Self-intersecting ("bowtie") or degenerate quads fail. */
export function isConvexQuad(corners: Corners): boolean {
  if (corners.length !== 4) {
    return false;
  }
  let sign = 0;
  for (let i = 0; i < 4; i++) {
    const a = corners[i]!;
    const b = corners[(i + 1) % 4]!;
    const c = corners[(i + 2) % 4]!;
    const cross = (b[0] - a[0]) * (c[1] - b[1]) - (b[1] - a[1]) * (c[0] - b[0]);
    if (cross === 0 || !Number.isFinite(cross)) {
      return false;
    }
    const s = cross > 0 ? 1 : -1;
    if (sign === 0) {
      sign = s;
    } else if (s !== sign) {
      return false;
    }
  }
  return true;
}
