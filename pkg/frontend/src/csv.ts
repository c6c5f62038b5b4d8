/**
 * Trial CSV parsing for the engine's output schema:
 * trial, generation, cumulative_evaluations, probe_evaluations,
 * probe_mean_error, <domain metrics...>
 */

import * as fs from "node:fs";
import * as path from "node:path";

export interface TrialFrame {
  trial: number;
  evaluations: number[];
  /** metric name -> one value per row (NaN where the engine wrote nan) */
  metrics: Map<string, number[]>;
}

export interface Treatment {
  label: string;
  metricNames: string[];
  trials: TrialFrame[];
}

export const BASE_COLUMNS = [
  "trial",
  "generation",
  "cumulative_evaluations",
  "probe_evaluations",
  "probe_mean_error",
];

export function parseTrialCsv(filePath: string): TrialFrame {
  const text = fs.readFileSync(filePath, "utf8").trim();
  const lines = text.split(/\r?\n/);
  if (lines.length < 2) {
    throw new Error(`${filePath}: no data rows`);
  }
  const header = lines[0].split(",");
  for (const col of BASE_COLUMNS) {
    if (!header.includes(col)) {
      throw new Error(`${filePath}: missing column '${col}'`);
    }
  }
  const idx = new Map(header.map((name, i) => [name, i]));
  const metricNames = header.filter(
    (name) => !BASE_COLUMNS.includes(name) || name === "probe_mean_error",
  );
  const evaluations: number[] = [];
  const metrics = new Map<string, number[]>(metricNames.map((m) => [m, []]));
  let trial = 0;
  for (const line of lines.slice(1)) {
    const cells = line.split(",");
    if (cells.length !== header.length) {
      throw new Error(`${filePath}: ragged row '${line}'`);
    }
    trial = Number(cells[idx.get("trial")!]);
    const evals = Number(cells[idx.get("cumulative_evaluations")!]);
    const prev = evaluations[evaluations.length - 1];
    if (prev !== undefined && evals <= prev) {
      throw new Error(`${filePath}: cumulative_evaluations not strictly increasing`);
    }
    evaluations.push(evals);
    for (const m of metricNames) {
      metrics.get(m)!.push(Number(cells[idx.get(m)!]));
    }
  }
  return { trial, evaluations, metrics };
}

export function loadTreatment(dir: string): Treatment {
  const manifestPath = path.join(dir, "manifest.json");
  if (!fs.existsSync(manifestPath)) {
    throw new Error(`${dir}: no manifest.json`);
  }
  const manifest = JSON.parse(fs.readFileSync(manifestPath, "utf8"));
  const files = fs
    .readdirSync(dir)
    .filter((f) => /^trial_\d+\.csv$/.test(f))
    .sort();
  if (files.length === 0) {
    throw new Error(`${dir}: no trial CSVs`);
  }
  const trials = files.map((f) => parseTrialCsv(path.join(dir, f)));
  const metricNames: string[] = [...manifest.domain_metrics, "probe_mean_error"];
  return { label: manifest.treatment ?? path.basename(dir), metricNames, trials };
}

/** Treatment directories: either `dir` itself or its direct subdirectories. */
export function discoverTreatments(root: string): Treatment[] {
  if (fs.existsSync(path.join(root, "manifest.json"))) {
    return [loadTreatment(root)];
  }
  const subDirs = fs
    .readdirSync(root, { withFileTypes: true })
    .filter((e) => e.isDirectory())
    .map((e) => path.join(root, e.name))
    .filter((d) => fs.existsSync(path.join(d, "manifest.json")))
    .sort();
  if (subDirs.length === 0) {
    throw new Error(`${root}: no treatment directories (manifest.json) found`);
  }
  return subDirs.map(loadTreatment);
}
