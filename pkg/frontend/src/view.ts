/** Letterbox mapping between viewport pixels and image pixels. */

export interface ViewTransform {
  scale: number;
  offsetX: number;
  offsetY: number;
  imageWidth: number;
  imageHeight: number;
}

export function computeTransform(
  viewportWidth: number,
  viewportHeight: number,
  imageWidth: number,
  imageHeight: number,
): ViewTransform {
  const scale = Math.min(viewportWidth / imageWidth, viewportHeight / imageHeight);
  return {
    scale,
    offsetX: (viewportWidth - imageWidth * scale) / 2,
    offsetY: (viewportHeight - imageHeight * scale) / 2,
    imageWidth,
    imageHeight,
  };
}

/** Viewport point -> image pixels, or null when outside the letterboxed image. */
export function viewportToImage(
  t: ViewTransform,
  vx: number,
  vy: number,
): { x: number; y: number } | null {
  const x = (vx - t.offsetX) / t.scale;
  const y = (vy - t.offsetY) / t.scale;
  if (x < 0 || y < 0 || x >= t.imageWidth || y >= t.imageHeight) {
    return null;
  }
  return { x, y };
}

export function imageToViewport(
  t: ViewTransform,
  ix: number,
  iy: number,
): { x: number; y: number } {
  return { x: ix * t.scale + t.offsetX, y: iy * t.scale + t.offsetY };
}
