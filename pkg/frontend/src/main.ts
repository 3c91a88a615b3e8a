import { ApiClient } from "./api.js";
import { SegmentController, OverlayMode } from "./controller.js";
import { drawOverlay } from "./overlay.js";
import { computeTransform, imageToViewport, viewportToImage, ViewTransform } from "./view.js";

const api = new ApiClient("");
const fileInput = document.getElementById("file") as HTMLInputElement;
const imageCanvas = document.getElementById("image") as HTMLCanvasElement;
const overlayCanvas = document.getElementById("overlay") as HTMLCanvasElement;
const slider = document.getElementById("threshold") as HTMLInputElement;
const sliderValue = document.getElementById("threshold-value") as HTMLSpanElement;
const modeSelect = document.getElementById("mode") as HTMLSelectElement;
const banner = document.getElementById("banner") as HTMLDivElement;
const statusLine = document.getElementById("status") as HTMLDivElement;

let bitmap: ImageBitmap | null = null;
let transform: ViewTransform | null = null;

const controller = new SegmentController(api, render);
controller.state.threshold = parseFloat(slider.value);

function render(): void {
  const state = controller.state;
  banner.textContent = state.banner;
  banner.style.display = state.banner ? "block" : "none";
  if (!bitmap || !transform) return;
  const region = {
    x: transform.offsetX,
    y: transform.offsetY,
    width: transform.imageWidth * transform.scale,
    height: transform.imageHeight * transform.scale,
  };
  const star = state.point
    ? imageToViewport(transform, state.point.x, state.point.y)
    : null;
  drawOverlay(overlayCanvas, state.lastResponse, state.overlayMode, region, star);
  if (state.lastResponse) {
    statusLine.textContent =
      `T=${state.lastResponse.threshold.toFixed(2)}, ` +
      `query patch (${state.lastResponse.query_patch.join(", ")}), ` +
      `${state.lastResponse.timing_ms.toFixed(1)} ms`;
  }
}

function redrawImage(): void {
  if (!bitmap) return;
  const ctx = imageCanvas.getContext("2d")!;
  ctx.clearRect(0, 0, imageCanvas.width, imageCanvas.height);
  transform = computeTransform(imageCanvas.width, imageCanvas.height, bitmap.width, bitmap.height);
  ctx.imageSmoothingEnabled = bitmap.width > imageCanvas.width;
  ctx.drawImage(
    bitmap,
    transform.offsetX,
    transform.offsetY,
    bitmap.width * transform.scale,
    bitmap.height * transform.scale,
  );
}

fileInput.addEventListener("change", async () => {
  const file = fileInput.files?.[0];
  if (!file) return;
  bitmap = await createImageBitmap(file);
  redrawImage();
  drawOverlay(overlayCanvas, null, "mask", { x: 0, y: 0, width: 0, height: 0 }, null);
  slider.disabled = false;
  try {
    await controller.uploadImage(file);
    statusLine.textContent = `session ready (${bitmap.width}x${bitmap.height})`;
  } catch {
    /* banner set by controller */
  }
});

overlayCanvas.addEventListener("click", (ev) => {
  if (!transform || !controller.state.session) return;
  const rect = overlayCanvas.getBoundingClientRect();
  const point = viewportToImage(
    transform,
    ((ev.clientX - rect.left) / rect.width) * overlayCanvas.width,
    ((ev.clientY - rect.top) / rect.height) * overlayCanvas.height,
  );
  if (!point) {
    statusLine.textContent = "click inside the image";
    return;
  }
  void controller.clickAt(point.x, point.y);
});

slider.addEventListener("input", () => {
  sliderValue.textContent = parseFloat(slider.value).toFixed(2);
  controller.setThreshold(parseFloat(slider.value));
});

modeSelect.addEventListener("change", () => {
  controller.setOverlayMode(modeSelect.value as OverlayMode);
});

void api
  .health()
  .then((h) => {
    statusLine.textContent = `model ${h.checkpoint_hash} @ ${h.resolution}px, patch ${h.patch_size}`;
  })
  .catch(() => {
    banner.textContent = "segmentation service unreachable";
    banner.style.display = "block";
  });
