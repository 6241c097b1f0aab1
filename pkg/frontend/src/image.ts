/**
 * PNG decode/encode via pngjs and a bicubic upsampler matching the dataset's
 * resampling convention (Catmull-Rom a = -0.5, pixel-center alignment, edge
 * clamp).
 */

import * as fs from 'node:fs';
import { PNG } from 'pngjs';

export interface FloatImage {
  height: number;
  width: number;
  /** RGB interleaved, values in [0, 1], length h*w*3. */
  data: Float32Array;
}

export function loadPng(path: string): FloatImage {
  const png = PNG.sync.read(fs.readFileSync(path));
  const { height, width } = png;
  const data = new Float32Array(height * width * 3);
  for (let i = 0; i < height * width; i++) {
    data[i * 3] = png.data[i * 4] / 255;
    data[i * 3 + 1] = png.data[i * 4 + 1] / 255;
    data[i * 3 + 2] = png.data[i * 4 + 2] / 255;
  }
  return { height, width, data };
}

export function savePng(path: string, img: FloatImage): void {
  const png = new PNG({ height: img.height, width: img.width });
  for (let i = 0; i < img.height * img.width; i++) {
    for (let c = 0; c < 3; c++) {
      png.data[i * 4 + c] = Math.round(Math.min(1, Math.max(0, img.data[i * 3 + c])) * 255);
    }
    png.data[i * 4 + 3] = 255;
  }
  fs.writeFileSync(path, PNG.sync.write(png));
}

function cubicWeight(t: number, a = -0.5): number {
  const at = Math.abs(t);
  if (at <= 1) return (a + 2) * at ** 3 - (a + 3) * at ** 2 + 1;
  if (at < 2) return a * at ** 3 - 5 * a * at ** 2 + 8 * a * at - 4 * a;
  return 0;
}

export function bicubicUpsample(img: FloatImage, outHeight: number, outWidth: number): FloatImage {
  const { height: h, width: w, data } = img;
  const out = new Float32Array(outHeight * outWidth * 3);
  const sy = h / outHeight;
  const sx = w / outWidth;
  for (let i = 0; i < outHeight; i++) {
    const fy = (i + 0.5) * sy - 0.5;
    const y0 = Math.floor(fy);
    const wy = fy - y0;
    for (let j = 0; j < outWidth; j++) {
      const fx = (j + 0.5) * sx - 0.5;
      const x0 = Math.floor(fx);
      const wx = fx - x0;
      for (let c = 0; c < 3; c++) {
        let acc = 0;
        for (let dy = -1; dy <= 2; dy++) {
          const y = Math.min(Math.max(y0 + dy, 0), h - 1);
          const ky = cubicWeight(dy - wy);
          for (let dx = -1; dx <= 2; dx++) {
            const x = Math.min(Math.max(x0 + dx, 0), w - 1);
            acc += ky * cubicWeight(dx - wx) * data[(y * w + x) * 3 + c];
          }
        }
        out[(i * outWidth + j) * 3 + c] = acc;
      }
    }
  }
  return { height: outHeight, width: outWidth, data: out };
}
