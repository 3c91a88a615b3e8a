import { SegmentResponse } from "./api.js";
import { decodeRle } from "./rle.js";
import { OverlayMode } from "./controller.js";

// Compact perceptually-uniform ramp (viridis control points), lerped.
const RAMP: [number, number, number][] = [
  [68, 1, 84],
  [72, 40, 120],
  [62, 74, 137],
  [49, 104, 142],
  [38, 130, 142],
  [31, 158, 137],
  [53, 183, 121],
  [109, 205, 89],
  [180, 222, 44],
  [253, 231, 37],
];

export function rampColor(v01: number): [number, number, number] {
  const v = Math.min(1, Math.max(0, v01)) * (RAMP.length - 1);
  const lo = Math.floor(v);
  const hi = Math.min(RAMP.length - 1, lo + 1);
  const t = v - lo;
  return [0, 1, 2].map((i) => Math.round(RAMP[lo][i] * (1 - t) + RAMP[hi][i] * t)) as [
    number,
    number,
    number,
  ];
}

/** Paint mask/heatmap cells into a grid-sized ImageData. */
export function overlayImageData(
  ctx: CanvasRenderingContext2D,
  resp: SegmentResponse,
  mode: OverlayMode,
): ImageData {
  const [hp, wp] = resp.grid;
  const mask = decodeRle(resp.mask_rle, hp * wp);
  const data = ctx.createImageData(wp, hp);
  for (let r = 0; r < hp; r++) {
    for (let c = 0; c < wp; c++) {
      const cell = r * wp + c;
      const px = cell * 4;
      if (mode === "mask" || mode === "both") {
        if (mask[cell]) {
          data.data[px] = 255;
          data.data[px + 1] = 64;
          data.data[px + 2] = 129;
          data.data[px + 3] = 140;
        }
      }
      if ((mode === "heatmap" || mode === "both") && !(mode === "both" && mask[cell])) {
        // similarity in [-1, 1] -> [0, 1] for the color ramp
        const v = (resp.heatmap[r][c] + 1) / 2;
        const [cr, cg, cb] = rampColor(v);
        data.data[px] = cr;
        data.data[px + 1] = cg;
        data.data[px + 2] = cb;
        data.data[px + 3] = mode === "heatmap" ? 150 : 90;
      }
    }
  }
  return data;
}

/** Draw the overlay aligned to the patch grid, plus the click star. */
export function drawOverlay(
  canvas: HTMLCanvasElement,
  resp: SegmentResponse | null,
  mode: OverlayMode,
  drawRegion: { x: number; y: number; width: number; height: number },
  star: { x: number; y: number } | null,
): void {
  const ctx = canvas.getContext("2d");
  if (!ctx) return;
  ctx.clearRect(0, 0, canvas.width, canvas.height);
  if (resp) {
    const [hp, wp] = resp.grid;
    const cellCanvas = document.createElement("canvas");
    cellCanvas.width = wp;
    cellCanvas.height = hp;
    const cellCtx = cellCanvas.getContext("2d")!;
    cellCtx.putImageData(overlayImageData(cellCtx, resp, mode), 0, 0);
    ctx.imageSmoothingEnabled = false;
    ctx.drawImage(cellCanvas, drawRegion.x, drawRegion.y, drawRegion.width, drawRegion.height);
  }
  if (star) {
    drawStar(ctx, star.x, star.y, 9, "#ffd700");
  }
}

function drawStar(
  ctx: CanvasRenderingContext2D,
  cx: number,
  cy: number,
  radius: number,
  color: string,
): void {
  ctx.save();
  ctx.beginPath();
  for (let i = 0; i < 10; i++) {
    const r = i % 2 === 0 ? radius : radius / 2.4;
    const a = (Math.PI / 5) * i - Math.PI / 2;
    const x = cx + r * Math.cos(a);
    const y = cy + r * Math.sin(a);
    if (i === 0) ctx.moveTo(x, y);
    else ctx.lineTo(x, y);
  }
  ctx.closePath();
  ctx.fillStyle = color;
  ctx.strokeStyle = "#333";
  ctx.lineWidth = 1;
  ctx.fill();
  ctx.stroke();
  ctx.restore();
}
