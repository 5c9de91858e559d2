/** Benchmark CSV ingestion: header validation and repeat-row extraction. */

import Papa from 'papaparse';

import { CsvColumn, SchemaError } from './schema';

export interface RepeatRow {
  algo: string;
  run: number;
  values: Record<string, number>;
}

/**
 * Parse one benchmark CSV. Lines starting with '#' are notes; `required`
 * columns must all be present or a SchemaError names the first missing
 * one. Only repeat rows (integer `run`) are returned; the emitter's
 * mean/p05/p95 summary rows are recomputed here, not trusted.
 */
export function parseBenchmarkCsv(text: string, required: CsvColumn[]): RepeatRow[] {
  const parsed = Papa.parse<Record<string, string>>(text, {
    header: true,
    comments: '#',
    skipEmptyLines: true,
  });
  if (parsed.errors.length > 0) {
    const first = parsed.errors[0];
    throw new SchemaError(`CSV parse error: ${first.message} (row ${first.row})`);
  }
  const header = parsed.meta.fields ?? [];
  for (const column of required) {
    if (!header.includes(column)) {
      throw new SchemaError(`missing column: ${column}`);
    }
  }
  const rows: RepeatRow[] = [];
  for (const record of parsed.data) {
    const run = record.run;
    if (!/^\d+$/.test(run ?? '')) {
      continue; // summary row
    }
    const values: Record<string, number> = {};
    for (const column of required) {
      if (column === 'algo' || column === 'run') continue;
      const num = Number(record[column]);
      if (!Number.isFinite(num)) {
        throw new SchemaError(`non-numeric value in column ${column}: ${record[column]}`);
      }
      values[column] = num;
    }
    rows.push({ algo: record.algo, run: Number(run), values });
  }
  return rows;
}
