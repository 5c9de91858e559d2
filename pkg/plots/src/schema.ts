/** Benchmark CSV schema and figure specifications. */

export const CSV_COLUMNS = [
  'algo', 'k', 'ktilde', 'eps', 'delta', 'skew', 'length', 'run',
  'recall', 'precision', 'are', 'update_ns', 'bytes', 'released_count',
] as const;

export type CsvColumn = (typeof CSV_COLUMNS)[number];

export const X_AXES = ['k', 'skew', 'eps', 'ktilde_factor'] as const;
export const Y_AXES = ['recall', 'precision', 'are', 'update_ns', 'bytes'] as const;

export type XAxis = (typeof X_AXES)[number];
export type YAxis = (typeof Y_AXES)[number];

export interface FigureSpec {
  x_axis: XAxis;
  y_axis: YAxis;
  series: string[];   // algo tags to draw
  inputs: string[];   // CSV paths
  output: string;     // SVG path
}

/** Columns a spec needs from every input CSV. */
export function requiredColumns(spec: FigureSpec): CsvColumn[] {
  const xCols: CsvColumn[] = spec.x_axis === 'ktilde_factor' ? ['ktilde', 'k'] : [spec.x_axis];
  return ['algo', 'run', ...xCols, spec.y_axis];
}

export class SchemaError extends Error {}

export function parseFigureSpec(raw: unknown): FigureSpec {
  if (typeof raw !== 'object' || raw === null) {
    throw new SchemaError('figure spec must be a JSON object');
  }
  const spec = raw as Record<string, unknown>;
  if (!X_AXES.includes(spec.x_axis as XAxis)) {
    throw new SchemaError(`x_axis must be one of ${X_AXES.join(', ')}`);
  }
  if (!Y_AXES.includes(spec.y_axis as YAxis)) {
    throw new SchemaError(`y_axis must be one of ${Y_AXES.join(', ')}`);
  }
  const series = spec.series;
  if (!Array.isArray(series) || series.length === 0 || !series.every((s) => typeof s === 'string')) {
    throw new SchemaError('series must be a non-empty list of algo tags');
  }
  const inputs = spec.inputs;
  if (!Array.isArray(inputs) || inputs.length === 0 || !inputs.every((s) => typeof s === 'string')) {
    throw new SchemaError('inputs must be a non-empty list of CSV paths');
  }
  if (typeof spec.output !== 'string' || spec.output.length === 0) {
    throw new SchemaError('output must be a file path');
  }
  return {
    x_axis: spec.x_axis as XAxis,
    y_axis: spec.y_axis as YAxis,
    series: series as string[],
    inputs: inputs as string[],
    output: spec.output,
  };
}
