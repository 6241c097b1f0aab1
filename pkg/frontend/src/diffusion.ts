/**
 * Denoising-diffusion plumbing: linear-beta schedule, forward noising,
 * sinusoidal timestep embeddings, a deterministic DDIM sampler, and a small
 * seeded PRNG for data order and seed derivation.
 */

import * as tf from '@tensorflow/tfjs';

export const TIMESTEP_EMBEDDING_DIM = 8;

export interface Schedule {
  timesteps: number;
  betas: Float32Array;
  alphaBars: Float32Array;
}

export function makeSchedule(timesteps: number): Schedule {
  const betas = new Float32Array(timesteps);
  const alphaBars = new Float32Array(timesteps);
  let prod = 1;
  for (let t = 0; t < timesteps; t++) {
    betas[t] = 1e-4 + ((0.02 - 1e-4) * t) / Math.max(timesteps - 1, 1);
    prod *= 1 - betas[t];
    alphaBars[t] = prod;
  }
  return { timesteps, betas, alphaBars };
}

/** x_t = sqrt(abar_t) * x0 + sqrt(1 - abar_t) * eps */
export function qSample(x0: tf.Tensor, eps: tf.Tensor, alphaBar: number): tf.Tensor {
  return tf.add(tf.mul(x0, Math.sqrt(alphaBar)), tf.mul(eps, Math.sqrt(1 - alphaBar)));
}

export function timestepEmbedding(t: number, timesteps: number): Float32Array {
  const out = new Float32Array(TIMESTEP_EMBEDDING_DIM);
  const half = TIMESTEP_EMBEDDING_DIM / 2;
  const pos = t / timesteps;
  for (let k = 0; k < half; k++) {
    const freq = Math.PI * 10 ** k;
    out[k] = Math.sin(pos * freq);
    out[half + k] = Math.cos(pos * freq);
  }
  return out;
}

/** mulberry32: tiny deterministic PRNG for data order and seed derivation. */
export class Rng {
  private state: number;

  constructor(seed: number) {
    this.state = seed >>> 0;
  }

  next(): number {
    this.state = (this.state + 0x6d2b79f5) >>> 0;
    let z = this.state;
    z = Math.imul(z ^ (z >>> 15), z | 1);
    z ^= z + Math.imul(z ^ (z >>> 7), z | 61);
    return ((z ^ (z >>> 14)) >>> 0) / 4294967296;
  }

  int(n: number): number {
    return Math.floor(this.next() * n);
  }

  /** 31-bit seed for tf random ops. */
  seed(): number {
    return Math.floor(this.next() * 2 ** 31);
  }

  permutation(n: number): number[] {
    const p = Array.from({ length: n }, (_, i) => i);
    for (let i = n - 1; i > 0; i--) {
      const j = this.int(i + 1);
      [p[i], p[j]] = [p[j], p[i]];
    }
    return p;
  }
}

export interface NoisePredictor {
  predictNoise(xt: tf.Tensor4D, lrUp: tf.Tensor4D, cond: tf.Tensor2D): tf.Tensor4D;
}

/**
 * Deterministic DDIM sampling (eta = 0) over an evenly spaced sub-sequence
 * of the schedule, starting from seeded Gaussian noise.
 */
export function ddimSample(
  model: NoisePredictor,
  lrUp: tf.Tensor4D,
  cond: (t: number) => tf.Tensor2D,
  schedule: Schedule,
  steps: number,
  seed: number,
): tf.Tensor4D {
  if (steps < 1 || steps > schedule.timesteps) {
    throw new Error(`sampler steps must be in [1, ${schedule.timesteps}], got ${steps}`);
  }
  const ts: number[] = [];
  for (let i = 0; i < steps; i++) {
    ts.push(Math.round(((steps - 1 - i) * (schedule.timesteps - 1)) / Math.max(steps - 1, 1)));
  }
  let x = tf.randomNormal(lrUp.shape, 0, 1, 'float32', seed) as tf.Tensor4D;
  for (let i = 0; i < ts.length; i++) {
    const t = ts[i];
    const aBar = schedule.alphaBars[t];
    const aPrev = i + 1 < ts.length ? schedule.alphaBars[ts[i + 1]] : 1;
    const xPrev = tf.tidy(() => {
      const condT = cond(t);
      const eps = model.predictNoise(x, lrUp, condT);
      const x0 = tf.mul(
        tf.sub(x, tf.mul(eps, Math.sqrt(1 - aBar))),
        1 / Math.sqrt(aBar),
      );
      return tf.add(
        tf.mul(x0, Math.sqrt(aPrev)),
        tf.mul(eps, Math.sqrt(1 - aPrev)),
      ) as tf.Tensor4D;
    });
    x.dispose();
    x = xPrev;
  }
  return x;
}
