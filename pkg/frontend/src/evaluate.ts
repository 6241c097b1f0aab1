/**
 * Conditioning-benefit evaluation: mean denoising loss on held-in records
 * under (a) matched bins, (b) bins randomly permuted across records, and
 * (c) the zero embedding. The three conditions share identical noise draws
 * and timesteps per record, so the comparison is exactly paired.
 */

import * as fs from 'node:fs';

import * as tf from '@tensorflow/tfjs';

import { initBackend } from './backend.js';
import { Rng, makeSchedule, timestepEmbedding } from './diffusion.js';
import { zeroEmbedding } from './embedding.js';
import { COND_DIM, Denoiser, type SerializedDenoiser } from './model.js';
import { loadToyDataset, type ToyDataset, type ToyTrainConfig } from './train.js';

export interface ConditioningReport {
  matched: number;
  permuted: number;
  zero: number;
  records: number;
  timestepsSampled: number[];
  permutation: number[];
  /** Image-condition dropout rate of the evaluated objective. */
  imageCondDropout: number;
  backend: string;
}

function condRow(embedding: Float32Array, t: number, timesteps: number): tf.Tensor2D {
  const row = new Float32Array(COND_DIM);
  row.set(embedding, 0);
  row.set(timestepEmbedding(t, timesteps), embedding.length);
  return tf.tensor2d(row, [1, COND_DIM]);
}

export async function evalConditioningOnData(
  model: Denoiser,
  data: ToyDataset,
  timesteps: number,
  seed: number,
  imageCondDropout = 0,
  nTimestepSamples = 10,
): Promise<ConditioningReport> {
  const backend = await initBackend();
  const schedule = makeSchedule(timesteps);
  const rng = new Rng(seed + 0xe7a1);
  const n = data.records.length;
  // Prefer a permutation without fixed points so self-assignments do not
  // dilute the matched-vs-permuted comparison.
  let permutation = rng.permutation(n);
  for (let tries = 0; tries < 64 && n > 1; tries++) {
    if (!permutation.some((p, i) => p === i)) break;
    permutation = rng.permutation(n);
  }
  const tGrid = Array.from({ length: nTimestepSamples }, (_, k) =>
    Math.min(timesteps - 1, Math.floor(((k + 0.5) * timesteps) / nTimestepSamples)),
  );

  const sums = { matched: 0, permuted: 0, zero: 0 };
  const zeroEmb = zeroEmbedding();
  let count = 0;
  for (let i = 0; i < n; i++) {
    for (const t of tGrid) {
      const epsSeed = rng.seed();
      // The loss is measured under the objective the checkpoint was trained
      // on, image-condition dropout included; the three conditions share
      // identical noise, timestep and dropout decisions (paired).
      const dropped = rng.next() < imageCondDropout;
      const losses = tf.tidy(() => {
        const x0 = tf.slice(data.x0, [i, 0, 0, 0], [1, -1, -1, -1]) as tf.Tensor4D;
        const lrSlice = tf.slice(data.lrUp, [i, 0, 0, 0], [1, -1, -1, -1]) as tf.Tensor4D;
        const lrUp = dropped ? (tf.zerosLike(lrSlice) as tf.Tensor4D) : lrSlice;
        const eps = tf.randomNormal(x0.shape, 0, 1, 'float32', epsSeed);
        const aBar = schedule.alphaBars[t];
        const xt = tf.add(
          tf.mul(x0, Math.sqrt(aBar)),
          tf.mul(eps, Math.sqrt(1 - aBar)),
        ) as tf.Tensor4D;
        const evalOne = (emb: Float32Array) => {
          const pred = model.predictNoise(xt, lrUp, condRow(emb, t, timesteps));
          return (tf.losses.meanSquaredError(eps, pred) as tf.Scalar).dataSync()[0];
        };
        return {
          matched: evalOne(data.embeddings[i]),
          permuted: evalOne(data.embeddings[permutation[i]]),
          zero: evalOne(zeroEmb),
        };
      });
      sums.matched += losses.matched;
      sums.permuted += losses.permuted;
      sums.zero += losses.zero;
      count++;
    }
  }
  return {
    matched: sums.matched / count,
    permuted: sums.permuted / count,
    zero: sums.zero / count,
    records: n,
    timestepsSampled: tGrid,
    permutation,
    imageCondDropout,
    backend,
  };
}

export interface Checkpoint {
  model: SerializedDenoiser;
  train_config: ToyTrainConfig;
  hr_size: number;
}

export function loadCheckpoint(path: string): Checkpoint {
  return JSON.parse(fs.readFileSync(path, 'utf-8')) as Checkpoint;
}

export async function evalConditioning(
  checkpointPath: string,
  manifestPath: string,
  seed = 0,
): Promise<ConditioningReport> {
  await initBackend();
  const ckpt = loadCheckpoint(checkpointPath);
  const model = Denoiser.deserialize(ckpt.model, ckpt.hr_size, ckpt.hr_size);
  const data = loadToyDataset(
    manifestPath,
    ckpt.train_config.patchSize,
    ckpt.train_config.recordLimit,
  );
  try {
    return await evalConditioningOnData(
      model,
      data,
      ckpt.train_config.timesteps,
      seed,
      ckpt.train_config.imageCondDropout ?? 0,
    );
  } finally {
    data.x0.dispose();
    data.lrUp.dispose();
  }
}
