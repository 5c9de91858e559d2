#!/usr/bin/env node
/** CLI: `plots render --spec <figure.json>`. Exit 0 ok, 2 on any error. */

import * as fs from 'fs';

import { render } from './render';
import { parseFigureSpec, SchemaError } from './schema';

export function main(argv: string[]): number {
  if (argv[0] !== 'render') {
    process.stderr.write('usage: plots render --spec <figure.json>\n');
    return 2;
  }
  const flag = argv.indexOf('--spec');
  if (flag === -1 || flag + 1 >= argv.length) {
    process.stderr.write('error: --spec <figure.json> is required\n');
    return 2;
  }
  try {
    const spec = parseFigureSpec(JSON.parse(fs.readFileSync(argv[flag + 1], 'utf8')));
    render(spec);
    process.stdout.write(`wrote ${spec.output}\n`);
    return 0;
  } catch (error) {
    const kind = error instanceof SchemaError ? 'schema error' : 'error';
    process.stderr.write(`${kind}: ${(error as Error).message}\n`);
    return 2;
  }
}

if (require.main === module) {
  process.exit(main(process.argv.slice(2)));
}
