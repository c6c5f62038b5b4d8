/**
 * Series alignment and bootstrapped confidence bands.
 *
 * Trials advance by different evaluation counts per generation, so each
 * trial's series is carried (last observation) onto a common evaluation
 * grid before any cross-trial statistics.
 */

export interface Band {
  grid: number[];
  mean: number[];
  lower: number[];
  upper: number[];
}

/** Deterministic 32-bit PRNG (mulberry32); enough for resampling indices. */
export function makeRng(seed: number): () => number {
  let a = seed >>> 0;
  return () => {
    a = (a + 0x6d2b79f5) >>> 0;
    let t = a;
    t = Math.imul(t ^ (t >>> 15), t | 1);
    t ^= t + Math.imul(t ^ (t >>> 7), t | 61);
    return ((t ^ (t >>> 14)) >>> 0) / 4294967296;
  };
}

export function mean(xs: number[]): number {
  return xs.reduce((a, b) => a + b, 0) / xs.length;
}

/** Linear-interpolation percentile of a sorted array, q in [0, 1]. */
export function percentileSorted(sorted: number[], q: number): number {
  const pos = q * (sorted.length - 1);
  const lo = Math.floor(pos);
  const hi = Math.ceil(pos);
  if (lo === hi) return sorted[lo];
  return sorted[lo] + (sorted[hi] - sorted[lo]) * (pos - lo);
}

/** Fixed evaluation grid spanning the range every trial covers. */
export function commonGrid(evaluationsPerTrial: number[][], points = 101): number[] {
  const start = Math.max(...evaluationsPerTrial.map((e) => e[0]));
  const end = Math.min(...evaluationsPerTrial.map((e) => e[e.length - 1]));
  if (!(end >= start)) {
    throw new Error("trials share no common evaluation range");
  }
  const grid: number[] = [];
  for (let i = 0; i < points; i++) {
    grid.push(start + ((end - start) * i) / (points - 1));
  }
  return grid;
}

/** Last-observation carry of one trial's series onto the grid. */
export function alignToGrid(
  evaluations: number[],
  values: number[],
  grid: number[],
): number[] {
  const out: number[] = [];
  let j = 0;
  for (const g of grid) {
    while (j + 1 < evaluations.length && evaluations[j + 1] <= g) j++;
    out.push(evaluations[j] <= g ? values[j] : NaN);
  }
  return out;
}

/**
 * Mean plus bootstrapped 95% band across aligned trial series.
 *
 * Per grid point the trial values are resampled with replacement
 * `resamples` times; the band is the 2.5th/97.5th percentile of the
 * resampled means. NaN trial values (metrics not yet defined) are
 * excluded pointwise; a point with no data stays NaN. With a single
 * trial the band collapses onto the mean and a warning is emitted.
 */
export function bootstrapBand(
  seriesPerTrial: number[][],
  grid: number[],
  resamples = 2000,
  seed = 12345,
  warn: (msg: string) => void = console.warn,
): Band {
  if (seriesPerTrial.length === 0) {
    throw new Error("no trial series given");
  }
  const single = seriesPerTrial.length < 2;
  if (single) {
    warn("single trial: rendering mean only, no confidence band");
  }
  const rng = makeRng(seed);
  const meanOut: number[] = [];
  const lower: number[] = [];
  const upper: number[] = [];
  for (let p = 0; p < grid.length; p++) {
    const values = seriesPerTrial.map((s) => s[p]).filter((v) => !Number.isNaN(v));
    if (values.length === 0) {
      meanOut.push(NaN);
      lower.push(NaN);
      upper.push(NaN);
      continue;
    }
    const m = mean(values);
    meanOut.push(m);
    if (single || values.length === 1) {
      lower.push(m);
      upper.push(m);
      continue;
    }
    const boots: number[] = [];
    for (let r = 0; r < resamples; r++) {
      let acc = 0;
      for (let i = 0; i < values.length; i++) {
        acc += values[Math.floor(rng() * values.length)];
      }
      boots.push(acc / values.length);
    }
    boots.sort((a, b) => a - b);
    lower.push(percentileSorted(boots, 0.025));
    upper.push(percentileSorted(boots, 0.975));
  }
  return { grid, mean: meanOut, lower, upper };
}
