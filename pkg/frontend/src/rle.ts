/**
 * Run-length mask codec matching the service wire format: row-major run
 * lengths, alternating values and always starting with the zero-run (which
 * may be 0 when the mask begins with a foreground cell).
 */

export function decodeRle(runs: number[], cells: number): Uint8Array {
  const total = runs.reduce((a, b) => a + b, 0);
  if (total !== cells) {
    throw new Error(`run lengths sum to ${total}, expected ${cells}`);
  }
  const out = new Uint8Array(cells);
  let pos = 0;
  let value = 0;
  for (const run of runs) {
    if (value === 1) {
      out.fill(1, pos, pos + run);
    }
    pos += run;
    value = 1 - value;
  }
  return out;
}

export function encodeRle(mask: ArrayLike<number>): number[] {
  const runs: number[] = [];
  let value = 0;
  let run = 0;
  for (let i = 0; i < mask.length; i++) {
    const cell = mask[i] ? 1 : 0;
    if (cell === value) {
      run += 1;
    } else {
      runs.push(run);
      value = 1 - value;
      run = 1;
    }
  }
  runs.push(run);
  return runs;
}

/** Foreground cell count without decoding: runs at odd positions are 1-runs. */
export function maskArea(runs: number[]): number {
  let area = 0;
  for (let i = 1; i < runs.length; i += 2) {
    area += runs[i];
  }
  return area;
}
