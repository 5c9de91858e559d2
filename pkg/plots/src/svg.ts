/** Deterministic SVG line charts: mean points joined, p5..p95 error bars. */

import { Series } from './aggregate';
import { FigureSpec } from './schema';

const WIDTH = 640;
const HEIGHT = 420;
const MARGIN = { top: 24, right: 24, bottom: 48, left: 72 };

const PALETTE = ['#1f77b4', '#d62728', '#2ca02c', '#9467bd', '#ff7f0e', '#8c564b'];

const fmt = (v: number): string => {
  const rounded = Number(v.toPrecision(6));
  return Object.is(rounded, -0) ? '0' : String(rounded);
};

interface Scale {
  (value: number): number;
  ticks: number[];
}

function linearScale(lo: number, hi: number, outLo: number, outHi: number): Scale {
  const span = hi - lo || 1;
  const scale = ((value: number) => outLo + ((value - lo) / span) * (outHi - outLo)) as Scale;
  const step = span / 4;
  scale.ticks = [0, 1, 2, 3, 4].map((i) => lo + i * step);
  return scale;
}

function logScale(lo: number, hi: number, outLo: number, outHi: number): Scale {
  const safeLo = Math.max(lo, 1e-12);
  const a = Math.log10(safeLo);
  const b = Math.log10(Math.max(hi, safeLo * 10));
  const scale = ((value: number) =>
    outLo + ((Math.log10(Math.max(value, 1e-12)) - a) / (b - a)) * (outHi - outLo)) as Scale;
  const ticks: number[] = [];
  for (let e = Math.floor(a); e <= Math.ceil(b); e += 1) ticks.push(10 ** e);
  scale.ticks = ticks;
  return scale;
}

export function renderSvg(series: Series[], spec: FigureSpec): string {
  const points = series.flatMap((s) => s.points);
  const xs = points.map((p) => p.x);
  const ys = points.flatMap((p) => [p.p05, p.p95, p.mean]);
  const xLo = xs.length ? Math.min(...xs) : 0;
  const xHi = xs.length ? Math.max(...xs) : 1;
  const yLo = ys.length ? Math.min(0, ...ys) : 0;
  const yHi = ys.length ? Math.max(...ys, 1e-12) : 1;

  const plotX0 = MARGIN.left;
  const plotX1 = WIDTH - MARGIN.right;
  const plotY0 = HEIGHT - MARGIN.bottom;
  const plotY1 = MARGIN.top;
  const sx =
    spec.x_axis === 'k'
      ? logScale(xLo, xHi, plotX0, plotX1)
      : linearScale(xLo, xHi, plotX0, plotX1);
  const sy = linearScale(yLo, yHi * 1.05, plotY0, plotY1);

  const parts: string[] = [];
  parts.push(
    `<svg xmlns="http://www.w3.org/2000/svg" width="${WIDTH}" height="${HEIGHT}" ` +
      `viewBox="0 0 ${WIDTH} ${HEIGHT}" font-family="sans-serif" font-size="12">`,
  );
  parts.push(`<rect width="${WIDTH}" height="${HEIGHT}" fill="white"/>`);
  // axes
  parts.push(
    `<line x1="${plotX0}" y1="${plotY0}" x2="${plotX1}" y2="${plotY0}" stroke="black"/>`,
    `<line x1="${plotX0}" y1="${plotY0}" x2="${plotX0}" y2="${plotY1}" stroke="black"/>`,
  );
  for (const tick of sx.ticks) {
    const px = fmt(sx(tick));
    parts.push(
      `<line x1="${px}" y1="${plotY0}" x2="${px}" y2="${plotY0 + 5}" stroke="black"/>`,
      `<text x="${px}" y="${plotY0 + 18}" text-anchor="middle">${fmt(tick)}</text>`,
    );
  }
  for (const tick of sy.ticks) {
    const py = fmt(sy(tick));
    parts.push(
      `<line x1="${plotX0 - 5}" y1="${py}" x2="${plotX0}" y2="${py}" stroke="black"/>`,
      `<text x="${plotX0 - 8}" y="${py}" text-anchor="end" dominant-baseline="middle">${fmt(tick)}</text>`,
    );
  }
  parts.push(
    `<text x="${(plotX0 + plotX1) / 2}" y="${HEIGHT - 10}" text-anchor="middle">${spec.x_axis}</text>`,
    `<text x="16" y="${(plotY0 + plotY1) / 2}" text-anchor="middle" ` +
      `transform="rotate(-90 16 ${(plotY0 + plotY1) / 2})">${spec.y_axis}</text>`,
  );

  series.forEach((s, index) => {
    const color = PALETTE[index % PALETTE.length];
    const line = s.points.map((p) => `${fmt(sx(p.x))},${fmt(sy(p.mean))}`).join(' ');
    if (s.points.length > 1) {
      parts.push(
        `<polyline points="${line}" fill="none" stroke="${color}" stroke-width="1.5" data-series="${s.algo}"/>`,
      );
    }
    for (const p of s.points) {
      const px = fmt(sx(p.x));
      parts.push(
        `<line x1="${px}" y1="${fmt(sy(p.p05))}" x2="${px}" y2="${fmt(sy(p.p95))}" ` +
          `stroke="${color}" data-errorbar="${s.algo}"/>`,
        `<circle cx="${px}" cy="${fmt(sy(p.mean))}" r="3" fill="${color}" data-point="${s.algo}"/>`,
      );
    }
    // legend
    const ly = MARGIN.top + 16 * index;
    parts.push(
      `<rect x="${plotX1 - 130}" y="${ly - 9}" width="10" height="10" fill="${color}"/>`,
      `<text x="${plotX1 - 114}" y="${ly}">${s.algo}</text>`,
    );
  });

  parts.push('</svg>');
  return parts.join('\n') + '\n';
}
