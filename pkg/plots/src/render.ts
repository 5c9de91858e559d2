/** Figure rendering: CSVs in, one SVG out. */

import * as fs from 'fs';
import * as path from 'path';

import { aggregate, Series } from './aggregate';
import { parseBenchmarkCsv, RepeatRow } from './csv';
import { FigureSpec, requiredColumns } from './schema';
import { renderSvg } from './svg';

export function buildSeries(spec: FigureSpec): Series[] {
  const required = requiredColumns(spec);
  const rows: RepeatRow[] = [];
  for (const input of spec.inputs) {
    rows.push(...parseBenchmarkCsv(fs.readFileSync(input, 'utf8'), required));
  }
  return aggregate(rows, spec);
}

/** Render the spec and write the SVG; returns the SVG text. */
export function render(spec: FigureSpec): string {
  const svg = renderSvg(buildSeries(spec), spec);
  fs.mkdirSync(path.dirname(path.resolve(spec.output)), { recursive: true });
  fs.writeFileSync(spec.output, svg);
  return svg;
}
