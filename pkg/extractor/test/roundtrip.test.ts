/**
 * Cross-component acceptance: bundles written here must parse under the
 * Python toolkit's reader with layers + 1 states, the preset's hidden
 * size, and token counts matching the linearization, and a probe must
 * train end-to-end on them. Spawns python3; the toolkit package must be
 * installed (pip install -e . at the repository root).
 */

import { execFileSync, spawnSync } from 'node:child_process';
import { mkdtempSync, rmSync } from 'node:fs';
import { tmpdir } from 'node:os';
import { dirname, join } from 'node:path';
import { fileURLToPath } from 'node:url';
import { afterAll, beforeAll, describe, expect, it } from 'vitest';

import { ENCODERS, resolveConfig } from '../src/config.js';
import { extractAll } from '../src/extract.js';
import { readLinearizations, readVocabulary } from '../src/linearization.js';

const HERE = dirname(fileURLToPath(import.meta.url));
const FIXTURE_HELPER = join(HERE, 'helpers', 'make_fixture.py');
const DIST_CLI = join(HERE, '..', 'dist', 'cli.js');
const SLOW = { timeout: 120_000 };

const TOOLKIT_SHIM = 'import sys\nfrom docstruct.cli import main\nsys.exit(main(sys.argv[1:]))';

const VERIFY_SNIPPET = `
import json, sys
from docstruct.bundles import load_bundle_dir, check_alignment
bundle_dir, lin_path, layers, hidden = sys.argv[1], sys.argv[2], int(sys.argv[3]), int(sys.argv[4])
lins = {}
with open(lin_path) as fh:
    for line in fh:
        rec = json.loads(line)
        lins[rec["doc"]] = rec
bundles = load_bundle_dir(bundle_dir)
assert sorted(bundles) == sorted(lins), (sorted(bundles), sorted(lins))
for doc, b in bundles.items():
    assert b.layer_count == layers, (doc, b.layer_count, layers)
    assert b.hidden_size == hidden, (doc, b.hidden_size, hidden)
    check_alignment(b, len(lins[doc]["tokens"]))
print("verified", len(bundles))
`;

function python(code: string, args: string[]): string {
  return execFileSync('python3', ['-c', code, ...args], { encoding: 'utf-8' });
}

function toolkit(args: string[]): string {
  return python(TOOLKIT_SHIM, args);
}

let dir: string;

beforeAll(() => {
  dir = mkdtempSync(join(tmpdir(), 'roundtrip-'));
  execFileSync('python3', [FIXTURE_HELPER, join(dir, 'corpus.jsonl'), '5'], { encoding: 'utf-8' });
  toolkit(['linearize', '--config', 'vanilla', '--in', join(dir, 'corpus.jsonl'), '--out', join(dir, 'lins-vanilla.jsonl')]);
  toolkit([
    'linearize', '--config', 'tok-type',
    '--in', join(dir, 'corpus.jsonl'),
    '--out', join(dir, 'lins-toktype.jsonl'),
    '--vocab-out', join(dir, 'vocab.json'),
  ]);
}, 120_000);

afterAll(() => {
  rmSync(dir, { recursive: true, force: true });
});

describe('toolkit round trip', () => {
  it('binary bundles parse under the toolkit reader with the right shape', SLOW, () => {
    const config = resolveConfig({ descriptor: 'vanilla', encoder: 'mini-2', format: 'binary' });
    const lins = readLinearizations(join(dir, 'lins-vanilla.jsonl'));
    expect(lins).toHaveLength(5);
    const out = join(dir, 'bundles-vanilla');
    const report = extractAll(lins, out, config, null);
    expect(report.written).toHaveLength(5);
    expect(report.skipped).toHaveLength(0);

    const verdict = python(VERIFY_SNIPPET, [
      out,
      join(dir, 'lins-vanilla.jsonl'),
      String(ENCODERS['mini-2'].layers + 1),
      String(ENCODERS['mini-2'].hiddenSize),
    ]);
    expect(verdict.trim()).toBe('verified 5');
  });

  it('text bundles from the CLI parse too, vocabulary handled', SLOW, () => {
    const out = join(dir, 'bundles-toktype');
    const stdout = execFileSync('node', [
      DIST_CLI,
      '--in', join(dir, 'lins-toktype.jsonl'),
      '--out-dir', out,
      '--config', 'tok-type',
      '--encoder', 'mini-2',
      '--vocab', join(dir, 'vocab.json'),
      '--format', 'text',
    ], { encoding: 'utf-8' });
    expect(stdout).toContain('written=5 skipped=0');

    // the manifest carries the full structural vocabulary
    expect(readVocabulary(join(dir, 'vocab.json')).tokens).toHaveLength(25);

    const verdict = python(VERIFY_SNIPPET, [
      out,
      join(dir, 'lins-toktype.jsonl'),
      String(ENCODERS['mini-2'].layers + 1),
      String(ENCODERS['mini-2'].hiddenSize),
    ]);
    expect(verdict.trim()).toBe('verified 5');
  });

  it('a probe trains end-to-end on five extracted documents', SLOW, () => {
    const config = resolveConfig({ descriptor: 'vanilla', encoder: 'mini-2' });
    const lins = readLinearizations(join(dir, 'lins-vanilla.jsonl'));
    const bundleDir = join(dir, 'bundles-probe');
    extractAll(lins, bundleDir, config, null);

    toolkit([
      'make-probes',
      '--in', join(dir, 'corpus.jsonl'),
      '--out-dir', join(dir, 'probes'),
      '--tasks', 'tree-depth',
      '--seed', '3',
    ]);
    const stdout = toolkit([
      'train-probe',
      '--instances', join(dir, 'probes', 'tree-depth.jsonl'),
      '--bundles', bundleDir,
      '--lins', join(dir, 'lins-vanilla.jsonl'),
      '--out', join(dir, 'probe-out'),
      '--epochs', '6',
      '--seed', '0',
    ]);
    expect(stdout).toContain('dev_accuracy=');
  });
});

describe('extractor command line', () => {
  it('prints usage on --help and exits 0', () => {
    const run = spawnSync('node', [DIST_CLI, '--help'], { encoding: 'utf-8' });
    expect(run.status).toBe(0);
    expect(run.stderr).toContain('usage: docstruct-extract');
  });

  it('exits 2 on an unknown flag', () => {
    const run = spawnSync('node', [DIST_CLI, '--bogus', 'x'], { encoding: 'utf-8' });
    expect(run.status).toBe(2);
    expect(run.stderr).toContain('unknown flag');
  });

  it('exits 1 on a missing input file', () => {
    const run = spawnSync(
      'node',
      [DIST_CLI, '--in', join(tmpdir(), 'no-such-lins.jsonl'), '--out-dir', join(tmpdir(), 'never-written'), '--config', 'vanilla'],
      { encoding: 'utf-8' }
    );
    expect(run.status).toBe(1);
    expect(run.stderr).toContain('error:');
  });
});
