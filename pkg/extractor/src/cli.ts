#!/usr/bin/env node
/**
 * Command-line entry point.
 *
 *   docstruct-extract --in lins.jsonl --out-dir bundles/ --config emb-depth \
 *       [--vocab vocab.json] [--encoder mini] [--format binary] \
 *       [--seed 0] [--max-length 512] [--init-std 0.0305]
 *
 * Exit codes: 0 ok, 1 data error (one line on stderr), 2 usage error.
 */

import { pathToFileURL } from 'node:url';

import { DESCRIPTORS, ENCODERS, resolveConfig } from './config.js';
import type { ExtractorOptions, OutputFormat } from './config.js';
import { extractAll } from './extract.js';
import { readLinearizations, readVocabulary } from './linearization.js';

const USAGE = `usage: docstruct-extract --in <lins.jsonl> --out-dir <dir> --config <descriptor>
                         [--vocab <vocab.json>] [--encoder <name>] [--format text|binary]
                         [--seed <int>] [--max-length <int>] [--init-std <float>]

configs:  ${Object.keys(DESCRIPTORS).sort().join(', ')}
encoders: ${Object.keys(ENCODERS).sort().join(', ')}`;

interface CliArgs {
  inPath: string;
  outDir: string;
  vocabPath: string | null;
  options: ExtractorOptions;
}

class UsageError extends Error {}

export function parseArgs(argv: string[]): CliArgs {
  const flags = new Map<string, string>();
  for (let i = 0; i < argv.length; i++) {
    const flag = argv[i];
    if (flag === '--help' || flag === '-h') {
      throw new UsageError('');
    }
    if (!flag.startsWith('--')) {
      throw new UsageError(`unexpected argument ${JSON.stringify(flag)}`);
    }
    const value = argv[i + 1];
    if (value === undefined) {
      throw new UsageError(`flag ${flag} needs a value`);
    }
    if (flags.has(flag)) {
      throw new UsageError(`flag ${flag} given twice`);
    }
    flags.set(flag, value);
    i++;
  }
  const known = new Set(['--in', '--out-dir', '--config', '--vocab', '--encoder', '--format', '--seed', '--max-length', '--init-std']);
  for (const flag of flags.keys()) {
    if (!known.has(flag)) {
      throw new UsageError(`unknown flag ${flag}`);
    }
  }
  for (const required of ['--in', '--out-dir', '--config']) {
    if (!flags.has(required)) {
      throw new UsageError(`missing required flag ${required}`);
    }
  }

  const numeric = (flag: string): number | undefined => {
    const raw = flags.get(flag);
    if (raw === undefined) return undefined;
    const value = Number(raw);
    if (!Number.isFinite(value)) {
      throw new UsageError(`flag ${flag} expects a number, got ${JSON.stringify(raw)}`);
    }
    return value;
  };

  return {
    inPath: flags.get('--in')!,
    outDir: flags.get('--out-dir')!,
    vocabPath: flags.get('--vocab') ?? null,
    options: {
      descriptor: flags.get('--config')!,
      encoder: flags.get('--encoder'),
      format: flags.get('--format') as OutputFormat | undefined,
      seed: numeric('--seed'),
      maxLength: numeric('--max-length'),
      initStd: numeric('--init-std'),
    },
  };
}

export function main(argv: string[]): number {
  let args: CliArgs;
  try {
    args = parseArgs(argv);
  } catch (err) {
    if (err instanceof UsageError) {
      if (err.message) console.error(`error: ${err.message}`);
      console.error(USAGE);
      return err.message ? 2 : 0;
    }
    throw err;
  }

  try {
    const config = resolveConfig(args.options);
    const vocabulary = args.vocabPath === null ? null : readVocabulary(args.vocabPath);
    const lins = readLinearizations(args.inPath);
    const report = extractAll(lins, args.outDir, config, vocabulary, (msg) => console.error(msg));
    console.log(`written=${report.written.length} skipped=${report.skipped.length} encoder=${report.encoder} config=${report.descriptor}`);
    return 0;
  } catch (err) {
    const message = err instanceof Error ? err.message : String(err);
    console.error(`error: ${message.replace(/\s+/g, ' ')}`);
    return 1;
  }
}

if (process.argv[1] !== undefined && import.meta.url === pathToFileURL(process.argv[1]).href) {
  process.exit(main(process.argv.slice(2)));
}
