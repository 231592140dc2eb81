#!/usr/bin/env node
/**
 * Batch MathJax render worker.
 *
 *   worker --input manifest.jsonl --output layouts.jsonl
 *          [--svg-dir DIR] [--timeout-ms N] [--macros macros.json]
 *
 * Exits non-zero only on I/O or configuration failure; per-formula render
 * errors are recorded in the output as render_ok=false lines.
 */

import * as fs from 'node:fs';

import { renderBatch } from './render';
import { WorkerConfig } from './types';

function usage(message?: string): never {
  if (message) {
    console.error(`error: ${message}`);
  }
  console.error(
    'usage: worker --input manifest.jsonl --output layouts.jsonl ' +
      '[--svg-dir DIR] [--timeout-ms N] [--macros macros.json]'
  );
  process.exit(2);
}

function parseArgs(argv: string[]): WorkerConfig {
  let inputPath: string | undefined;
  let outputPath: string | undefined;
  let svgDir: string | undefined;
  let timeoutMs = 5000;
  let macros: Record<string, string> = {};
  for (let i = 0; i < argv.length; i += 1) {
    const arg = argv[i];
    const next = () => {
      i += 1;
      if (i >= argv.length) {
        usage(`${arg} needs a value`);
      }
      return argv[i];
    };
    switch (arg) {
      case '--input':
        inputPath = next();
        break;
      case '--output':
        outputPath = next();
        break;
      case '--svg-dir':
        svgDir = next();
        break;
      case '--timeout-ms':
        timeoutMs = Number(next());
        break;
      case '--macros': {
        const macroPath = next();
        try {
          macros = JSON.parse(fs.readFileSync(macroPath, 'utf-8'));
        } catch (err) {
          usage(`cannot read macros file ${macroPath}: ${err}`);
        }
        break;
      }
      default:
        usage(`unknown argument ${arg}`);
    }
  }
  if (!inputPath) {
    usage('--input is required');
  }
  if (!outputPath) {
    usage('--output is required');
  }
  if (!Number.isFinite(timeoutMs) || timeoutMs <= 0) {
    usage('--timeout-ms must be a positive number');
  }
  if (!fs.existsSync(inputPath)) {
    usage(`input manifest not found: ${inputPath}`);
  }
  return { inputPath, outputPath, svgDir, timeoutMs, macros };
}

async function main(): Promise<void> {
  const cfg = parseArgs(process.argv.slice(2));
  const summary = await renderBatch(cfg);
  console.error(`rendered ${summary.rendered}, failed ${summary.failed}`);
}

main().catch((err) => {
  console.error(`error: ${err && err.message ? err.message : err}`);
  process.exit(1);
});
