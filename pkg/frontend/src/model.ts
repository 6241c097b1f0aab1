/**
 * Small conditional denoiser.
 *
 * Stacked 3x3 "convolutions" built from nine shifted slices feeding a
 * pointwise dense layer (the WASM backend trains matmul but lacks conv
 * backprop kernels). The conditioning vector (bin embedding + timestep
 * embedding) modulates the features after the first and middle stages with
 * a FiLM-style scale and shift; the multiplicative path makes the features
 * depend on which bins are set, not just on their overall magnitude.
 * Predicts the noise added to the HR image.
 */

import * as tf from '@tensorflow/tfjs';

import { EMBEDDING_DIM } from './embedding.js';
import { TIMESTEP_EMBEDDING_DIM, type NoisePredictor } from './diffusion.js';

export const COND_DIM = EMBEDDING_DIM + TIMESTEP_EMBEDDING_DIM;

export const POSITIONAL_CHANNELS = 8;

/**
 * Fixed Fourier positional channels. Channel-constant FiLM gates alone
 * cannot synthesize spatial structure from the conditioning vector; gating
 * positional harmonics can.
 */
export function positionalChannels(height: number, width: number): tf.Tensor4D {
  const data = new Float32Array(height * width * POSITIONAL_CHANNELS);
  for (let y = 0; y < height; y++) {
    for (let x = 0; x < width; x++) {
      const base = (y * width + x) * POSITIONAL_CHANNELS;
      let k = 0;
      for (const f of [1, 2]) {
        data[base + k++] = Math.sin((2 * Math.PI * f * y) / height);
        data[base + k++] = Math.cos((2 * Math.PI * f * y) / height);
        data[base + k++] = Math.sin((2 * Math.PI * f * x) / width);
        data[base + k++] = Math.cos((2 * Math.PI * f * x) / width);
      }
    }
  }
  return tf.tensor4d(data, [1, height, width, POSITIONAL_CHANNELS]);
}

export interface DenoiserConfig {
  channels: number;
  seed: number;
}

/** Nine 3x3-shifted copies of x concatenated on the channel axis. */
export function shiftConcat(x: tf.Tensor4D): tf.Tensor4D {
  const [b, h, w, c] = x.shape;
  const padded = tf.pad(x, [
    [0, 0],
    [1, 1],
    [1, 1],
    [0, 0],
  ]);
  const parts: tf.Tensor4D[] = [];
  for (const dy of [0, 1, 2]) {
    for (const dx of [0, 1, 2]) {
      parts.push(tf.slice(padded, [0, dy, dx, 0], [b, h, w, c]) as tf.Tensor4D);
    }
  }
  return tf.concat(parts, -1) as tf.Tensor4D;
}

export class Denoiser implements NoisePredictor {
  readonly config: DenoiserConfig;
  private readonly stages: tf.layers.Layer[];
  private readonly filmScale1: tf.layers.Layer;
  private readonly filmShift1: tf.layers.Layer;
  private readonly filmScale2: tf.layers.Layer;
  private readonly filmShift2: tf.layers.Layer;
  private readonly outLayer: tf.layers.Layer;
  private built = false;

  constructor(config: Partial<DenoiserConfig> = {}) {
    this.config = { channels: 16, seed: 0, ...config };
    const { channels: ch, seed } = this.config;
    const dense = (units: number, i: number, activation?: 'relu') =>
      tf.layers.dense({
        units,
        activation,
        kernelInitializer: tf.initializers.glorotUniform({ seed: seed + i }),
      });
    this.stages = [dense(ch, 1, 'relu'), dense(ch, 2, 'relu'), dense(ch, 3, 'relu')];
    this.filmScale1 = dense(ch, 4);
    this.filmShift1 = dense(ch, 5);
    this.filmScale2 = dense(ch, 6);
    this.filmShift2 = dense(ch, 7);
    this.outLayer = dense(3, 8);
    this.pos = null;
  }

  private pos: tf.Tensor4D | null;

  private positional(height: number, width: number): tf.Tensor4D {
    if (!this.pos || this.pos.shape[1] !== height || this.pos.shape[2] !== width) {
      this.pos?.dispose();
      this.pos = tf.keep(positionalChannels(height, width));
    }
    return this.pos;
  }

  private layerList(): tf.layers.Layer[] {
    return [
      ...this.stages,
      this.filmScale1,
      this.filmShift1,
      this.filmScale2,
      this.filmShift2,
      this.outLayer,
    ];
  }

  private film(
    x: tf.Tensor4D,
    cond4: tf.Tensor4D,
    scale: tf.layers.Layer,
    shift: tf.layers.Layer,
  ): tf.Tensor4D {
    const s = tf.add(1, scale.apply(cond4) as tf.Tensor4D);
    return tf.add(tf.mul(x, s), shift.apply(cond4) as tf.Tensor4D) as tf.Tensor4D;
  }

  predictNoise(xt: tf.Tensor4D, lrUp: tf.Tensor4D, cond: tf.Tensor2D): tf.Tensor4D {
    const b = xt.shape[0];
    const cond4 = tf.reshape(cond, [b, 1, 1, COND_DIM]) as tf.Tensor4D;
    let x = this.stages[0].apply(shiftConcat(tf.concat([xt, lrUp], -1) as tf.Tensor4D)) as tf.Tensor4D;
    x = this.film(x, cond4, this.filmScale1, this.filmShift1);
    x = this.stages[1].apply(shiftConcat(x)) as tf.Tensor4D;
    x = this.film(x, cond4, this.filmScale2, this.filmShift2);
    x = this.stages[2].apply(shiftConcat(x)) as tf.Tensor4D;
    return this.outLayer.apply(shiftConcat(x)) as tf.Tensor4D;
  }

  /** Run one forward pass so every layer creates its variables. */
  build(height: number, width: number): void {
    if (this.built) return;
    tf.tidy(() => {
      const xt = tf.zeros([1, height, width, 3]) as tf.Tensor4D;
      const cond = tf.zeros([1, COND_DIM]) as tf.Tensor2D;
      this.predictNoise(xt, xt, cond);
    });
    this.built = true;
  }

  /** Trainable variables in a fixed positional order. */
  trainableVariables(): tf.Variable[] {
    return this.layerList().flatMap((l) =>
      l.trainableWeights.map((w) => (w as unknown as { val: tf.Variable }).val),
    );
  }

  /** Weight tensors serialized positionally (layer order is fixed). */
  async serialize(): Promise<SerializedDenoiser> {
    const weights = [];
    for (const layer of this.layerList()) {
      for (const w of layer.weights) {
        const t = w.read();
        weights.push({ shape: t.shape.slice(), values: Array.from(await t.data()) });
      }
    }
    return { config: this.config, weights };
  }

  static deserialize(data: SerializedDenoiser, height: number, width: number): Denoiser {
    const model = new Denoiser(data.config);
    model.build(height, width);
    const slots = model.layerList().flatMap((l) => l.weights);
    if (slots.length !== data.weights.length) {
      throw new Error(
        `checkpoint has ${data.weights.length} weight tensors, model needs ${slots.length}`,
      );
    }
    slots.forEach((w, i) => {
      const saved = data.weights[i];
      w.write(tf.tensor(saved.values, saved.shape as number[]));
    });
    return model;
  }
}

export interface SerializedDenoiser {
  config: DenoiserConfig;
  weights: { shape: number[]; values: number[] }[];
}
