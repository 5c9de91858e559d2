/** Group repeat rows into per-(algo, x) points with percentile error bars. */

import { RepeatRow } from './csv';
import { FigureSpec } from './schema';

export interface SeriesPoint {
  x: number;
  mean: number;
  p05: number;
  p95: number;
}

export interface Series {
  algo: string;
  points: SeriesPoint[];
}

/** Linear-interpolated percentile over a sorted copy (numpy's default). */
export function percentile(values: number[], q: number): number {
  const sorted = [...values].sort((a, b) => a - b);
  if (sorted.length === 1) return sorted[0];
  const pos = ((sorted.length - 1) * q) / 100;
  const lo = Math.floor(pos);
  const hi = Math.ceil(pos);
  const frac = pos - lo;
  return sorted[lo] * (1 - frac) + sorted[hi] * frac;
}

function mean(values: number[]): number {
  return values.reduce((a, b) => a + b, 0) / values.length;
}

function xValue(row: RepeatRow, spec: FigureSpec): number {
  if (spec.x_axis === 'ktilde_factor') {
    return row.values.ktilde / row.values.k;
  }
  return row.values[spec.x_axis];
}

export function aggregate(rows: RepeatRow[], spec: FigureSpec): Series[] {
  const series: Series[] = [];
  for (const algo of spec.series) {
    const groups = new Map<number, number[]>();
    for (const row of rows) {
      if (row.algo !== algo) continue;
      const x = xValue(row, spec);
      const bucket = groups.get(x) ?? [];
      bucket.push(row.values[spec.y_axis]);
      groups.set(x, bucket);
    }
    const points = [...groups.entries()]
      .map(([x, ys]) => ({
        x,
        mean: mean(ys),
        p05: percentile(ys, 5),
        p95: percentile(ys, 95),
      }))
      .sort((a, b) => a.x - b.x);
    series.push({ algo, points });
  }
  return series;
}
