/**
 * Reader for the dataset manifest format (UTF-8 JSON Lines).
 *
 * Line 1 is a header object with format_version and the build config;
 * each following line is one record binding HR/LR paths, the prompt,
 * discretized bins, and the sampled degradation parameters.
 */

import * as fs from 'node:fs';
import * as path from 'node:path';

export type LevelName = 'light' | 'medium' | 'heavy' | 'unspecified';
export type DirectionName = 'upsample' | 'downsample' | 'unchange' | 'unspecified';

export interface PromptBins {
  blur: LevelName;
  resize1: DirectionName;
  noise: LevelName;
  compression: LevelName;
  resize2: boolean;
}

export interface ManifestRecord {
  id: string;
  hr_path: string;
  lr_path: string;
  prompt: string;
  bins: PromptBins;
  spec: Record<string, unknown>;
  record_index: number;
}

export interface Manifest {
  header: {
    format_version: number;
    config: { hr_patch: number; [key: string]: unknown };
    [key: string]: unknown;
  };
  records: ManifestRecord[];
  /** Directory the record paths are relative to. */
  root: string;
}

const LEVELS: LevelName[] = ['light', 'medium', 'heavy', 'unspecified'];
const DIRECTIONS: DirectionName[] = ['upsample', 'downsample', 'unchange', 'unspecified'];

function checkBins(bins: unknown, lineno: number): PromptBins {
  const b = bins as PromptBins;
  if (
    !b ||
    !LEVELS.includes(b.blur) ||
    !DIRECTIONS.includes(b.resize1) ||
    !LEVELS.includes(b.noise) ||
    !LEVELS.includes(b.compression) ||
    typeof b.resize2 !== 'boolean'
  ) {
    throw new Error(`manifest line ${lineno}: malformed bins field`);
  }
  return b;
}

export function readManifest(manifestPath: string): Manifest {
  const text = fs.readFileSync(manifestPath, 'utf-8');
  const lines = text.split('\n').filter((l) => l.trim() !== '');
  if (lines.length === 0) {
    throw new Error(`empty manifest: ${manifestPath}`);
  }
  const header = JSON.parse(lines[0]);
  if (typeof header.format_version !== 'number') {
    throw new Error(`manifest line 1: missing format_version header`);
  }
  const records: ManifestRecord[] = [];
  for (let i = 1; i < lines.length; i++) {
    let obj: ManifestRecord;
    try {
      obj = JSON.parse(lines[i]);
    } catch (err) {
      throw new Error(`manifest line ${i + 1}: invalid JSON (${err})`);
    }
    for (const field of ['id', 'hr_path', 'lr_path', 'prompt', 'bins', 'record_index'] as const) {
      if (!(field in obj)) {
        throw new Error(`manifest line ${i + 1}: record missing '${field}'`);
      }
    }
    obj.bins = checkBins(obj.bins, i + 1);
    records.push(obj);
  }
  return { header, records, root: path.dirname(manifestPath) };
}
