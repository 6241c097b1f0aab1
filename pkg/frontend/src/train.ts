/**
 * Toy training loop: overfit a small text-conditioned denoiser on manifest
 * records, persisting the checkpoint, the loss curve (JSON + PNG), and the
 * training metadata.
 */

import * as fs from 'node:fs';
import * as path from 'node:path';

import * as tf from '@tensorflow/tfjs';

import { initBackend } from './backend.js';
import { Rng, makeSchedule, timestepEmbedding } from './diffusion.js';
import { embedBins } from './embedding.js';
import { bicubicUpsample, loadPng } from './image.js';
import { readManifest, type ManifestRecord } from './manifest.js';
import { COND_DIM, Denoiser } from './model.js';

export interface ToyTrainConfig {
  manifestPath: string;
  outDir: string;
  /** LR-side patch size the dataset is expected to carry. */
  patchSize: number;
  /** Total diffusion timesteps (paper-scale value is 2,000; toy default 200). */
  timesteps: number;
  samplerSteps: number;
  learningRate: number;
  iterations: number;
  batchSize: number;
  channels: number;
  /** Train on only the first N records (overfitting checks use 8). */
  recordLimit?: number;
  /**
   * Probability of zeroing the LR-image condition for a training sample.
   * Forces the denoiser to sometimes rely on the bin embedding alone, so the
   * text conditioning pathway carries record-discriminative weight instead
   * of being shadowed by the image branch.
   */
  imageCondDropout: number;
  seed: number;
}

export const TOY_DEFAULTS = {
  patchSize: 32,
  timesteps: 200,
  samplerSteps: 20,
  learningRate: 2e-4,
  iterations: 2000,
  batchSize: 1,
  channels: 16,
  imageCondDropout: 0.25,
  seed: 0,
} as const;

export function resolveConfig(partial: Partial<ToyTrainConfig>): ToyTrainConfig {
  if (!partial.manifestPath || !partial.outDir) {
    throw new Error('manifestPath and outDir are required');
  }
  const cfg = { ...TOY_DEFAULTS, ...partial } as ToyTrainConfig;
  if (cfg.samplerSteps < 1 || cfg.timesteps < cfg.samplerSteps) {
    throw new Error(
      `need timesteps >= samplerSteps >= 1, got ${cfg.timesteps} / ${cfg.samplerSteps}`,
    );
  }
  if (cfg.iterations < 1 || cfg.batchSize < 1) {
    throw new Error('iterations and batchSize must be >= 1');
  }
  if (cfg.imageCondDropout < 0 || cfg.imageCondDropout >= 1) {
    throw new Error(`imageCondDropout must be in [0, 1), got ${cfg.imageCondDropout}`);
  }
  return cfg;
}

export interface ToyDataset {
  records: ManifestRecord[];
  /** [n, hr, hr, 3] clean HR targets. */
  x0: tf.Tensor4D;
  /** [n, hr, hr, 3] bicubic-upsampled LR conditioning images. */
  lrUp: tf.Tensor4D;
  /** [n, 13] bin indicator embeddings. */
  embeddings: Float32Array[];
  hrSize: number;
}

export function loadToyDataset(
  manifestPath: string,
  patchSize: number,
  recordLimit?: number,
): ToyDataset {
  const manifest = readManifest(manifestPath);
  const records = recordLimit ? manifest.records.slice(0, recordLimit) : manifest.records;
  if (records.length < 1) {
    throw new Error(`manifest has no records: ${manifestPath}`);
  }
  const x0Parts: number[] = [];
  const lrParts: number[] = [];
  const embeddings: Float32Array[] = [];
  let hrSize = 0;
  for (const rec of records) {
    const hr = loadPng(path.join(manifest.root, rec.hr_path));
    const lr = loadPng(path.join(manifest.root, rec.lr_path));
    if (lr.height !== patchSize || lr.width !== patchSize) {
      throw new Error(
        `record ${rec.id}: LR is ${lr.width}x${lr.height}, expected patch size ${patchSize}`,
      );
    }
    if (hrSize === 0) hrSize = hr.height;
    if (hr.height !== hrSize || hr.width !== hrSize) {
      throw new Error(`record ${rec.id}: inconsistent HR dims`);
    }
    const up = bicubicUpsample(lr, hr.height, hr.width);
    x0Parts.push(...hr.data);
    lrParts.push(...up.data);
    embeddings.push(embedBins(rec.bins));
  }
  const n = records.length;
  return {
    records,
    x0: tf.tensor4d(x0Parts, [n, hrSize, hrSize, 3]),
    lrUp: tf.tensor4d(lrParts, [n, hrSize, hrSize, 3]),
    embeddings,
    hrSize,
  };
}

export function condTensor(
  embeddings: Float32Array[],
  indices: number[],
  ts: number[],
  timesteps: number,
): tf.Tensor2D {
  const rows: number[] = [];
  for (let k = 0; k < indices.length; k++) {
    rows.push(...embeddings[indices[k]], ...timestepEmbedding(ts[k], timesteps));
  }
  return tf.tensor2d(rows, [indices.length, COND_DIM]);
}

export function smooth(values: number[], window = 50): number[] {
  const out: number[] = [];
  let acc = 0;
  for (let i = 0; i < values.length; i++) {
    acc += values[i];
    if (i >= window) acc -= values[i - window];
    out.push(acc / Math.min(i + 1, window));
  }
  return out;
}

export interface TrainResult {
  losses: number[];
  smoothed: number[];
  checkpointPath: string;
  curvePath: string;
  plotPath: string;
  backend: string;
}

export async function trainToy(partial: Partial<ToyTrainConfig>): Promise<TrainResult> {
  const cfg = resolveConfig(partial);
  const backend = await initBackend();
  const schedule = makeSchedule(cfg.timesteps);
  const data = loadToyDataset(cfg.manifestPath, cfg.patchSize, cfg.recordLimit);
  const model = new Denoiser({ channels: cfg.channels, seed: cfg.seed });
  model.build(data.hrSize, data.hrSize);
  const varList = model.trainableVariables();
  const opt = tf.train.adam(cfg.learningRate, 0.9, 0.99);
  const rng = new Rng(cfg.seed + 0x51ed);

  const losses: number[] = [];
  for (let step = 0; step < cfg.iterations; step++) {
    const indices = Array.from({ length: cfg.batchSize }, () => rng.int(data.records.length));
    const ts = indices.map(() => rng.int(cfg.timesteps));
    const epsSeed = rng.seed();
    const dropImage = indices.map(() => rng.next() < cfg.imageCondDropout);
    const lossVal = tf.tidy(() => {
      const x0 = tf.concat(indices.map((i) => tf.slice(data.x0, [i, 0, 0, 0], [1, -1, -1, -1])));
      const lrUp = tf.concat(
        indices.map((i, k) => {
          const slice = tf.slice(data.lrUp, [i, 0, 0, 0], [1, -1, -1, -1]);
          return dropImage[k] ? tf.zerosLike(slice) : slice;
        }),
      );
      const cond = condTensor(data.embeddings, indices, ts, cfg.timesteps);
      const eps = tf.randomNormal(x0.shape, 0, 1, 'float32', epsSeed);
      const aBars = tf.tensor4d(
        ts.map((t) => schedule.alphaBars[t]),
        [cfg.batchSize, 1, 1, 1],
      );
      const xt = tf.add(
        tf.mul(x0, tf.sqrt(aBars)),
        tf.mul(eps, tf.sqrt(tf.sub(1, aBars))),
      ) as tf.Tensor4D;
      const loss = opt.minimize(
        () => {
          const pred = model.predictNoise(xt, lrUp as tf.Tensor4D, cond);
          if (
            pred.shape[1] !== data.hrSize ||
            pred.shape[2] !== data.hrSize ||
            pred.shape[3] !== 3
          ) {
            throw new Error(`prediction shape ${pred.shape} != HR patch dims`);
          }
          return tf.losses.meanSquaredError(eps, pred) as tf.Scalar;
        },
        true,
        varList,
      );
      return loss!.dataSync()[0];
    });
    losses.push(lossVal);
  }

  fs.mkdirSync(cfg.outDir, { recursive: true });
  const smoothed = smooth(losses);
  const checkpointPath = path.join(cfg.outDir, 'checkpoint.json');
  const curvePath = path.join(cfg.outDir, 'loss_curve.json');
  const plotPath = path.join(cfg.outDir, 'loss_curve.png');
  const serialized = await model.serialize();
  fs.writeFileSync(
    checkpointPath,
    JSON.stringify({
      model: serialized,
      train_config: { ...cfg },
      // paper-scale reference values, for the record: 2,000 timesteps,
      // 50 DDIM steps, 64px crops, 1M iterations
      scale_note: 'toy-scale run; timesteps/iterations far below reference settings',
      backend,
      hr_size: data.hrSize,
      final_smoothed_loss: smoothed[smoothed.length - 1],
    }),
  );
  fs.writeFileSync(curvePath, JSON.stringify({ losses, smoothed, config: { ...cfg } }, null, 2));
  const { writeLossCurvePng } = await import('./plot.js');
  writeLossCurvePng(plotPath, losses, smoothed);
  data.x0.dispose();
  data.lrUp.dispose();
  return { losses, smoothed, checkpointPath, curvePath, plotPath, backend };
}
