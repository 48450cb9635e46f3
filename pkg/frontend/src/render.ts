/** Canvas helpers: paint base64 raw-RGB frames and the target overlay. */

import type { ViewInfo } from "./protocol.js";
import { WorkspaceMap, worldToCanvas } from "./input.js";

/** Decode base64 RGB bytes into RGBA ImageData. */
export function rgbToImageData(b64: string, view: ViewInfo): ImageData {
  const raw = atob(b64);
  const out = new ImageData(view.w, view.h);
  const n = view.w * view.h;
  for (let i = 0; i < n; i++) {
    out.data[i * 4] = raw.charCodeAt(i * 3);
    out.data[i * 4 + 1] = raw.charCodeAt(i * 3 + 1);
    out.data[i * 4 + 2] = raw.charCodeAt(i * 3 + 2);
    out.data[i * 4 + 3] = 255;
  }
  return out;
}

export function drawFrame(canvas: HTMLCanvasElement, b64: string, view: ViewInfo): void {
  const ctx = canvas.getContext("2d");
  if (!ctx) return;
  const img = rgbToImageData(b64, view);
  const off = new OffscreenCanvas(view.w, view.h);
  const octx = off.getContext("2d");
  if (!octx) return;
  octx.putImageData(img, 0, 0);
  ctx.imageSmoothingEnabled = false;
  ctx.drawImage(off, 0, 0, canvas.width, canvas.height);
}

export function drawTargetMarker(canvas: HTMLCanvasElement, map: WorkspaceMap,
                                 x: number, y: number, color: string): void {
  const ctx = canvas.getContext("2d");
  if (!ctx) return;
  const [px, py] = worldToCanvas(map, x, y);
  ctx.strokeStyle = color;
  ctx.lineWidth = 1.5;
  ctx.beginPath();
  ctx.moveTo(px - 6, py);
  ctx.lineTo(px + 6, py);
  ctx.moveTo(px, py - 6);
  ctx.lineTo(px, py + 6);
  ctx.stroke();
}
