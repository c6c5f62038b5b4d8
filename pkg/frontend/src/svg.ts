/** Minimal SVG line charts: mean curves with translucent confidence bands. */

import type { Band } from "./stats.js";

export interface Curve {
  label: string;
  band: Band;
  color: string;
}

export const PALETTE = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b"];

const W = 860;
const H = 560;
const MARGIN = { left: 80, right: 24, top: 40, bottom: 56 };

function finite(xs: number[]): number[] {
  return xs.filter((v) => Number.isFinite(v));
}

function niceTicks(lo: number, hi: number, n = 6): number[] {
  if (lo === hi) return [lo];
  const span = hi - lo;
  const step = Math.pow(10, Math.floor(Math.log10(span / n)));
  const err = (span / n) / step;
  const mult = err >= 7.5 ? 10 : err >= 3.5 ? 5 : err >= 1.5 ? 2 : 1;
  const s = step * mult;
  const ticks: number[] = [];
  for (let t = Math.ceil(lo / s) * s; t <= hi + 1e-12; t += s) {
    ticks.push(Number(t.toPrecision(12)));
  }
  return ticks;
}

function fmt(v: number): string {
  if (Math.abs(v) >= 100_000) return v.toExponential(1).replace("+", "");
  return Number(v.toPrecision(6)).toString();
}

export function renderFigure(title: string, xLabel: string, curves: Curve[]): string {
  const xs = finite(curves.flatMap((c) => c.band.grid));
  const ys = finite(curves.flatMap((c) => [...c.band.lower, ...c.band.upper, ...c.band.mean]));
  if (xs.length === 0 || ys.length === 0) {
    throw new Error(`figure '${title}': no finite data to plot`);
  }
  const xLo = Math.min(...xs);
  const xHi = Math.max(...xs);
  let yLo = Math.min(...ys);
  let yHi = Math.max(...ys);
  if (yLo === yHi) {
    yLo -= 0.5;
    yHi += 0.5;
  }
  const pad = 0.04 * (yHi - yLo);
  yLo -= pad;
  yHi += pad;
  const plotW = W - MARGIN.left - MARGIN.right;
  const plotH = H - MARGIN.top - MARGIN.bottom;
  const px = (x: number) => MARGIN.left + ((x - xLo) / (xHi - xLo || 1)) * plotW;
  const py = (y: number) => MARGIN.top + (1 - (y - yLo) / (yHi - yLo)) * plotH;

  const parts: string[] = [];
  parts.push(
    `<svg xmlns="http://www.w3.org/2000/svg" width="${W}" height="${H}" viewBox="0 0 ${W} ${H}" font-family="sans-serif">`,
    `<rect width="${W}" height="${H}" fill="white"/>`,
    `<text x="${W / 2}" y="24" text-anchor="middle" font-size="17">${title}</text>`,
  );
  for (const t of niceTicks(xLo, xHi)) {
    const x = px(t);
    parts.push(
      `<line x1="${x}" y1="${MARGIN.top}" x2="${x}" y2="${H - MARGIN.bottom}" stroke="#eee"/>`,
      `<text x="${x}" y="${H - MARGIN.bottom + 20}" text-anchor="middle" font-size="12">${fmt(t)}</text>`,
    );
  }
  for (const t of niceTicks(yLo + pad, yHi - pad)) {
    const y = py(t);
    parts.push(
      `<line x1="${MARGIN.left}" y1="${y}" x2="${W - MARGIN.right}" y2="${y}" stroke="#eee"/>`,
      `<text x="${MARGIN.left - 8}" y="${y + 4}" text-anchor="end" font-size="12">${fmt(t)}</text>`,
    );
  }
  parts.push(
    `<rect x="${MARGIN.left}" y="${MARGIN.top}" width="${plotW}" height="${plotH}" fill="none" stroke="#444"/>`,
    `<text x="${MARGIN.left + plotW / 2}" y="${H - 12}" text-anchor="middle" font-size="13">${xLabel}</text>`,
  );

  for (const curve of curves) {
    const { grid, mean, lower, upper } = curve.band;
    const segs: number[][] = [];
    let current: number[] = [];
    for (let i = 0; i < grid.length; i++) {
      if (Number.isFinite(mean[i])) {
        current.push(i);
      } else if (current.length) {
        segs.push(current);
        current = [];
      }
    }
    if (current.length) segs.push(current);
    for (const seg of segs) {
      const bandPath =
        seg.map((i, k) => `${k === 0 ? "M" : "L"}${px(grid[i]).toFixed(1)},${py(upper[i]).toFixed(1)}`).join(" ") +
        " " +
        [...seg].reverse().map((i) => `L${px(grid[i]).toFixed(1)},${py(lower[i]).toFixed(1)}`).join(" ") +
        " Z";
      parts.push(`<path d="${bandPath}" fill="${curve.color}" opacity="0.18" stroke="none"/>`);
      const line = seg
        .map((i, k) => `${k === 0 ? "M" : "L"}${px(grid[i]).toFixed(1)},${py(mean[i]).toFixed(1)}`)
        .join(" ");
      parts.push(`<path d="${line}" fill="none" stroke="${curve.color}" stroke-width="1.8"/>`);
    }
  }

  curves.forEach((curve, i) => {
    const y = MARGIN.top + 16 + 18 * i;
    const x = MARGIN.left + 12;
    parts.push(
      `<line x1="${x}" y1="${y - 4}" x2="${x + 22}" y2="${y - 4}" stroke="${curve.color}" stroke-width="2.5"/>`,
      `<text x="${x + 28}" y="${y}" font-size="12">${curve.label}</text>`,
    );
  });
  parts.push("</svg>");
  return parts.join("\n");
}
