/**
 * CLI for the toy consumer.
 *
 *   tsx src/cli.ts train --manifest data/manifest.jsonl --out runs/toy \
 *       [--iterations 2000] [--records 8] [--patch 32] [--seed 0] ...
 *   tsx src/cli.ts eval --checkpoint runs/toy/checkpoint.json \
 *       --manifest data/manifest.jsonl [--out report.json] [--seed 0]
 */

import * as fs from 'node:fs';

import { evalConditioning } from './evaluate.js';
import { trainToy, type ToyTrainConfig } from './train.js';

function parseFlags(argv: string[]): Map<string, string> {
  const flags = new Map<string, string>();
  for (let i = 0; i < argv.length; i += 2) {
    if (!argv[i].startsWith('--') || i + 1 >= argv.length) {
      throw new Error(`expected --flag value pairs, got '${argv[i]}'`);
    }
    flags.set(argv[i].slice(2), argv[i + 1]);
  }
  return flags;
}

function numberFlag(flags: Map<string, string>, name: string): number | undefined {
  const raw = flags.get(name);
  if (raw === undefined) return undefined;
  const v = Number(raw);
  if (!Number.isFinite(v)) throw new Error(`--${name} must be a number, got '${raw}'`);
  return v;
}

async function main(): Promise<number> {
  const [command, ...rest] = process.argv.slice(2);
  if (command === 'train') {
    const flags = parseFlags(rest);
    const cfg: Partial<ToyTrainConfig> = {
      manifestPath: flags.get('manifest'),
      outDir: flags.get('out'),
      iterations: numberFlag(flags, 'iterations'),
      recordLimit: numberFlag(flags, 'records'),
      patchSize: numberFlag(flags, 'patch'),
      timesteps: numberFlag(flags, 'timesteps'),
      samplerSteps: numberFlag(flags, 'sampler-steps'),
      learningRate: numberFlag(flags, 'lr'),
      batchSize: numberFlag(flags, 'batch'),
      channels: numberFlag(flags, 'channels'),
      seed: numberFlag(flags, 'seed'),
    };
    for (const key of Object.keys(cfg) as (keyof ToyTrainConfig)[]) {
      if (cfg[key] === undefined) delete cfg[key];
    }
    const result = await trainToy(cfg);
    const final = result.smoothed[result.smoothed.length - 1];
    console.error(
      `backend ${result.backend}; ${result.losses.length} steps; ` +
        `smoothed loss ${result.smoothed[0].toFixed(4)} -> ${final.toFixed(4)}`,
    );
    console.log(result.checkpointPath);
    return 0;
  }
  if (command === 'eval') {
    const flags = parseFlags(rest);
    const checkpoint = flags.get('checkpoint');
    const manifest = flags.get('manifest');
    if (!checkpoint || !manifest) {
      throw new Error('eval requires --checkpoint and --manifest');
    }
    const report = await evalConditioning(checkpoint, manifest, numberFlag(flags, 'seed') ?? 0);
    const text = JSON.stringify(report, null, 2);
    const out = flags.get('out');
    if (out) fs.writeFileSync(out, text);
    console.log(text);
    return 0;
  }
  console.error('usage: cli.ts <train|eval> --flag value ...');
  return 2;
}

main().then(
  (code) => process.exit(code),
  (err) => {
    console.error(`error: ${err.message ?? err}`);
    process.exit(1);
  },
);
