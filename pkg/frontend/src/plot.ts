/** Figure generation: one SVG per domain metric, treatments overlaid. */

import * as fs from "node:fs";
import * as path from "node:path";

import { discoverTreatments, Treatment } from "./csv.js";
import { alignToGrid, Band, bootstrapBand, commonGrid } from "./stats.js";
import { Curve, PALETTE, renderFigure } from "./svg.js";

export interface PlotOptions {
  metric?: string;
  resamples?: number;
  seed?: number;
  gridPoints?: number;
  warn?: (msg: string) => void;
}

export function treatmentBand(
  treatment: Treatment,
  metric: string,
  opts: PlotOptions = {},
): Band {
  const series = treatment.trials.map((t) => t.metrics.get(metric));
  if (series.some((s) => s === undefined)) {
    throw new Error(`treatment '${treatment.label}' has no metric '${metric}'`);
  }
  const grid = commonGrid(
    treatment.trials.map((t) => t.evaluations),
    opts.gridPoints ?? 101,
  );
  const aligned = treatment.trials.map((t, i) =>
    alignToGrid(t.evaluations, series[i]!, grid),
  );
  return bootstrapBand(aligned, grid, opts.resamples ?? 2000, opts.seed ?? 12345, opts.warn);
}

export function renderFigures(
  inputDir: string,
  outputDir: string,
  opts: PlotOptions = {},
): string[] {
  const treatments = discoverTreatments(inputDir);
  const metrics = opts.metric
    ? [opts.metric]
    : [...new Set(treatments.flatMap((t) => t.metricNames))];
  fs.mkdirSync(outputDir, { recursive: true });
  const written: string[] = [];
  for (const metric of metrics) {
    const curves: Curve[] = [];
    treatments.forEach((t, i) => {
      if (!t.metricNames.includes(metric)) return;
      curves.push({
        label: t.label,
        band: treatmentBand(t, metric, opts),
        color: PALETTE[i % PALETTE.length],
      });
    });
    if (curves.length === 0) {
      throw new Error(`metric '${metric}' not present in any treatment`);
    }
    const svg = renderFigure(metric, "evaluations", curves);
    const file = path.join(outputDir, `${metric}.svg`);
    fs.writeFileSync(file, svg);
    written.push(file);
  }
  return written;
}
