/**
 * Fixed 13-dimensional indicator embedding of prompt bins:
 * 3 (blur level) + 3 (resize direction) + 3 (noise level) +
 * 3 (compression level) + 1 (final downsample present).
 * Unspecified components leave their block all-zero.
 */

import type { DirectionName, LevelName, PromptBins } from './manifest.js';

export const EMBEDDING_DIM = 13;

const LEVEL_INDEX: Record<Exclude<LevelName, 'unspecified'>, number> = {
  light: 0,
  medium: 1,
  heavy: 2,
};

const DIRECTION_INDEX: Record<Exclude<DirectionName, 'unspecified'>, number> = {
  upsample: 0,
  downsample: 1,
  unchange: 2,
};

export function embedBins(bins: PromptBins): Float32Array {
  const v = new Float32Array(EMBEDDING_DIM);
  if (bins.blur !== 'unspecified') v[LEVEL_INDEX[bins.blur]] = 1;
  if (bins.resize1 !== 'unspecified') v[3 + DIRECTION_INDEX[bins.resize1]] = 1;
  if (bins.noise !== 'unspecified') v[6 + LEVEL_INDEX[bins.noise]] = 1;
  if (bins.compression !== 'unspecified') v[9 + LEVEL_INDEX[bins.compression]] = 1;
  if (bins.resize2) v[12] = 1;
  return v;
}

export function zeroEmbedding(): Float32Array {
  return new Float32Array(EMBEDDING_DIM);
}

/**
 * Minimal parser for the default prompt grammar, enough to rebuild bins
 * from the manifest's prompt strings: comma-separated "<level> <component>"
 * descriptors and bare direction tokens (first binds the first resize, a
 * second "downsample" binds the final one).
 */
export function parsePromptBins(prompt: string): PromptBins {
  const bins: PromptBins = {
    blur: 'unspecified',
    resize1: 'unspecified',
    noise: 'unspecified',
    compression: 'unspecified',
    resize2: false,
  };
  const levelRe = /^(light|medium|heavy)\s+(blur|noise|compression)$/;
  for (const raw of prompt.split(',')) {
    const token = raw.trim().toLowerCase().replace(/\s+/g, ' ');
    if (token === '') continue;
    const m = token.match(levelRe);
    if (m) {
      bins[m[2] as 'blur' | 'noise' | 'compression'] = m[1] as Exclude<LevelName, 'unspecified'>;
      continue;
    }
    if (token === 'upsample' || token === 'downsample' || token === 'unchange') {
      if (bins.resize1 === 'unspecified') {
        bins.resize1 = token;
      } else if (token === 'downsample') {
        bins.resize2 = true;
      } else {
        throw new Error(`cannot bind extra direction token '${token}'`);
      }
      continue;
    }
    throw new Error(`unrecognized prompt token: '${token}'`);
  }
  return bins;
}
