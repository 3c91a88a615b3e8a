import { describe, expect, it } from "vitest";
import { decodeRle, encodeRle, maskArea } from "../src/rle.js";

describe("rle", () => {
  it("decodes the all-ones mask [0, n]", () => {
    const mask = decodeRle([0, 64], 64);
    expect(mask.length).toBe(64);
    expect([...mask].every((v) => v === 1)).toBe(true);
  });

  it("decodes the all-zeros mask [n]", () => {
    const mask = decodeRle([9], 9);
    expect([...mask].every((v) => v === 0)).toBe(true);
  });

  it("starts with the zero-run", () => {
    // 1 1 0 -> zero-run of 0, then two ones, then one zero
    expect([...decodeRle([0, 2, 1], 3)]).toEqual([1, 1, 0]);
  });

  it("round-trips random masks", () => {
    let seed = 12345;
    const rand = () => ((seed = (seed * 1103515245 + 12345) & 0x7fffffff) / 0x7fffffff);
    for (let trial = 0; trial < 50; trial++) {
      const cells = 1 + Math.floor(rand() * 100);
      const mask = Array.from({ length: cells }, () => (rand() > 0.5 ? 1 : 0));
      const runs = encodeRle(mask);
      expect([...decodeRle(runs, cells)]).toEqual(mask);
      expect(maskArea(runs)).toBe(mask.reduce((a, b) => a + b, 0));
    }
  });

  it("rejects mismatched totals", () => {
    expect(() => decodeRle([3, 2], 4)).toThrow(/expected 4/);
  });
});
