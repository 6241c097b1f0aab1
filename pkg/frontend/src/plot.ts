/**
 * Minimal loss-curve plotting: raw and smoothed series rendered onto an RGBA
 * raster and written as PNG.
 */

import * as fs from 'node:fs';
import { PNG } from 'pngjs';

const WIDTH = 640;
const HEIGHT = 360;
const MARGIN = 30;

function putPixel(png: PNG, x: number, y: number, r: number, g: number, b: number): void {
  if (x < 0 || y < 0 || x >= png.width || y >= png.height) return;
  const idx = (y * png.width + x) * 4;
  png.data[idx] = r;
  png.data[idx + 1] = g;
  png.data[idx + 2] = b;
  png.data[idx + 3] = 255;
}

function drawSeries(
  png: PNG,
  values: number[],
  yMin: number,
  yMax: number,
  color: [number, number, number],
): void {
  const plotW = png.width - 2 * MARGIN;
  const plotH = png.height - 2 * MARGIN;
  let px = -1;
  let py = -1;
  for (let i = 0; i < values.length; i++) {
    const x = MARGIN + Math.round((i / Math.max(values.length - 1, 1)) * plotW);
    const frac = (values[i] - yMin) / Math.max(yMax - yMin, 1e-12);
    const y = png.height - MARGIN - Math.round(Math.min(Math.max(frac, 0), 1) * plotH);
    if (px >= 0) {
      const steps = Math.max(Math.abs(x - px), Math.abs(y - py), 1);
      for (let s = 0; s <= steps; s++) {
        putPixel(
          png,
          Math.round(px + ((x - px) * s) / steps),
          Math.round(py + ((y - py) * s) / steps),
          ...color,
        );
      }
    }
    px = x;
    py = y;
  }
}

export function writeLossCurvePng(path: string, losses: number[], smoothed: number[]): void {
  const png = new PNG({ width: WIDTH, height: HEIGHT });
  png.data.fill(255);
  for (let i = 0; i < png.width * png.height; i++) png.data[i * 4 + 3] = 255;
  // axes
  for (let x = MARGIN; x < WIDTH - MARGIN; x++) putPixel(png, x, HEIGHT - MARGIN, 0, 0, 0);
  for (let y = MARGIN; y < HEIGHT - MARGIN; y++) putPixel(png, MARGIN, y, 0, 0, 0);
  const all = losses.concat(smoothed);
  const yMax = Math.max(...all, 1e-12);
  drawSeries(png, losses, 0, yMax, [190, 190, 190]);
  drawSeries(png, smoothed, 0, yMax, [200, 40, 40]);
  fs.writeFileSync(path, PNG.sync.write(png));
}
