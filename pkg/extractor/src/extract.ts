/**
 * Extraction pipeline: linearization file in, one representation-bundle
 * file per document out.
 *
 * Per document: split tokens into subwords (structural symbols stay
 * atomic), skip anything over the length cap, add structural-embedding
 * rows per the active pathway, run the frozen encoder, pool each
 * toolkit token's subword states back to one vector per layer, and
 * write the bundle. Pooling keeps bundle token counts equal to the
 * linearization's, so the toolkit's node spans index it directly.
 */

import { mkdirSync, writeFileSync } from 'node:fs';
import { join } from 'node:path';

import { BINARY_SUFFIX, TEXT_SUFFIX, bundleBinary, bundleText, makeBundle } from './bundle.js';
import type { ExtractorConfig } from './config.js';
import { Encoder } from './encoder.js';
import type { Linearization, VocabularyManifest } from './linearization.js';
import { splitTokens } from './subword.js';

/** Binary bundles carry their id in the filename, so it must be one. */
const SAFE_DOC_ID = /^[A-Za-z0-9._-]+$/;

export interface WrittenBundle {
  doc: string;
  path: string;
  layers: number;
  tokens: number;
  hidden: number;
  subwords: number;
}

export interface SkippedDocument {
  doc: string;
  reason: string;
}

export interface ExtractReport {
  descriptor: string;
  encoder: string;
  seed: number;
  written: WrittenBundle[];
  skipped: SkippedDocument[];
}

function structuralRows(lin: Linearization, config: ExtractorConfig, encoder: Encoder, owner: number[]): Array<Float64Array | null> | null {
  if (config.embeddingPathway === 'none') {
    return null;
  }
  const table = config.embeddingPathway === 'type'
    ? (id: number) => encoder.typeRow(id)
    : (id: number) => encoder.depthRow(id);
  const ids = config.embeddingPathway === 'type' ? lin.typeIds : lin.depthIds;
  return owner.map((tokenIndex) => table(ids[tokenIndex]));
}

export function extractDocument(
  lin: Linearization,
  config: ExtractorConfig,
  encoder: Encoder,
  atomic: ReadonlySet<string>
): { values: Float32Array; layers: number; hidden: number; subwords: number } | { skip: string } {
  const split = splitTokens(lin.tokens, atomic);
  if (split.pieces.length > config.maxLength) {
    return { skip: `${split.pieces.length} subwords exceed the ${config.maxLength} limit` };
  }

  // owning toolkit token per subword position
  const owner: number[] = new Array(split.pieces.length);
  for (let t = 0; t < lin.tokens.length; t++) {
    for (let s = split.firstSub[t]; s <= split.lastSub[t]; s++) {
      owner[s] = t;
    }
  }

  const states = encoder.forward(split.pieces, structuralRows(lin, config, encoder, owner));
  const layers = states.length;
  const d = config.encoder.hiddenSize;
  const n = lin.tokens.length;

  // mean-pool each token's subwords, layer by layer; fround at the end
  // so the stored float32 is the rounding of the float64 mean
  const values = new Float32Array(layers * n * d);
  for (let layer = 0; layer < layers; layer++) {
    for (let t = 0; t < n; t++) {
      const first = split.firstSub[t];
      const last = split.lastSub[t];
      const count = last - first + 1;
      const at = (layer * n + t) * d;
      for (let c = 0; c < d; c++) {
        let sum = 0;
        for (let s = first; s <= last; s++) {
          sum += states[layer][s][c];
        }
        values[at + c] = Math.fround(sum / count);
      }
    }
  }
  return { values, layers, hidden: d, subwords: split.pieces.length };
}

export function extractAll(
  lins: Linearization[],
  outDir: string,
  config: ExtractorConfig,
  vocabulary: VocabularyManifest | null,
  log: (message: string) => void = () => {}
): ExtractReport {
  if (config.tokenPathway !== 'none' && vocabulary === null) {
    throw new Error(`config ${config.descriptor} puts structural symbols in the stream; a vocabulary manifest is required`);
  }
  // vanilla and embedding-only configs get no vocabulary extension
  const atomic: ReadonlySet<string> = config.tokenPathway === 'none'
    ? new Set()
    : new Set(vocabulary!.tokens);

  mkdirSync(outDir, { recursive: true });
  const encoder = new Encoder(config.encoder, config.seed, config.initStd);
  const report: ExtractReport = {
    descriptor: config.descriptor,
    encoder: config.encoder.name,
    seed: config.seed,
    written: [],
    skipped: [],
  };

  for (const lin of lins) {
    if (!SAFE_DOC_ID.test(lin.doc)) {
      throw new Error(`document id ${JSON.stringify(lin.doc)} is not filename-safe`);
    }
    const result = extractDocument(lin, config, encoder, atomic);
    if ('skip' in result) {
      report.skipped.push({ doc: lin.doc, reason: result.skip });
      log(`skipping ${lin.doc}: ${result.skip}`);
      continue;
    }
    const bundle = makeBundle(lin.doc, result.layers, lin.tokens.length, result.hidden, result.values);
    const path = join(outDir, lin.doc + (config.format === 'binary' ? BINARY_SUFFIX : TEXT_SUFFIX));
    if (config.format === 'binary') {
      writeFileSync(path, bundleBinary(bundle));
    } else {
      writeFileSync(path, bundleText(bundle), 'utf-8');
    }
    report.written.push({
      doc: lin.doc,
      path,
      layers: result.layers,
      tokens: lin.tokens.length,
      hidden: result.hidden,
      subwords: result.subwords,
    });
  }

  const manifestPath = join(outDir, 'extract-report.json');
  writeFileSync(manifestPath, JSON.stringify(report, null, 2) + '\n', 'utf-8');
  return report;
}
