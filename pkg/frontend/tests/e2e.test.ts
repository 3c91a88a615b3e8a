/**
 * End-to-end loop against a live service (started by e2e/run.sh):
 * upload -> click -> decoded mask, timed; threshold sweep monotonicity.
 * Gated behind PATCHSIM_E2E so the unit suite runs with no service built.
 */
import { readFileSync } from "node:fs";
import { describe, expect, it } from "vitest";
import { ApiClient } from "../src/api.js";
import { SegmentController } from "../src/controller.js";
import { decodeRle, maskArea } from "../src/rle.js";

const enabled = !!process.env.PATCHSIM_E2E;
const baseUrl = process.env.PATCHSIM_SERVICE_URL ?? "http://127.0.0.1:8765";
const imagePath = process.env.PATCHSIM_E2E_IMAGE ?? "";

describe.runIf(enabled)("live service loop", () => {
  it("upload -> click -> mask overlay data within 1 second", async () => {
    const api = new ApiClient(baseUrl);
    const health = await api.health();
    expect(health.status).toBe("ok");

    const controller = new SegmentController(api);
    const png = readFileSync(imagePath);
    const started = performance.now();
    const session = await controller.uploadImage(new Uint8Array(png));
    await controller.clickAt(session.width / 2, session.height / 2);
    const elapsed = performance.now() - started;

    const resp = controller.state.lastResponse!;
    expect(resp).not.toBeNull();
    const [hp, wp] = resp.grid;
    const mask = decodeRle(resp.mask_rle, hp * wp);
    expect(mask.length).toBe(hp * wp);
    expect(elapsed).toBeLessThan(1000);
  });

  it("overlay area nonincreasing over an increasing threshold sweep", async () => {
    const api = new ApiClient(baseUrl);
    const controller = new SegmentController(api);
    const png = readFileSync(imagePath);
    const session = await controller.uploadImage(new Uint8Array(png));

    const areas: number[] = [];
    for (let i = 0; i <= 20; i++) {
      controller.state.threshold = -1 + i * 0.1;
      await controller.clickAt(session.width / 3, session.height / 3);
      areas.push(maskArea(controller.state.lastResponse!.mask_rle));
    }
    for (let i = 1; i < areas.length; i++) {
      expect(areas[i]).toBeLessThanOrEqual(areas[i - 1]);
    }
    expect(controller.stats.maxInFlight).toBe(1);
  });
});
