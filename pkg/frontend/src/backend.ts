/**
 * tfjs backend selection: prefer WASM (an order of magnitude faster than the
 * plain-JS CPU backend for this workload), fall back to cpu.
 */

import { createRequire } from 'node:module';
import * as path from 'node:path';

import * as tf from '@tensorflow/tfjs';
import { setWasmPaths } from '@tensorflow/tfjs-backend-wasm';

let initialized: Promise<string> | null = null;

export function initBackend(): Promise<string> {
  if (!initialized) {
    initialized = (async () => {
      try {
        const require = createRequire(import.meta.url);
        const dist = path.dirname(require.resolve('@tensorflow/tfjs-backend-wasm'));
        setWasmPaths(dist + path.sep);
        const ok = await tf.setBackend('wasm');
        if (!ok) throw new Error('setBackend(wasm) returned false');
      } catch {
        await tf.setBackend('cpu');
      }
      await tf.ready();
      return tf.getBackend();
    })();
  }
  return initialized;
}
