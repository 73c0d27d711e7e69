/**
 * Readers for the toolkit's interchange files: the line-delimited
 * linearization format and the structural-vocabulary manifest.
 */

import { readFileSync } from 'node:fs';

export interface Linearization {
  doc: string;
  tokens: string[];
  typeIds: number[];
  depthIds: number[];
  /** node id -> inclusive [first, last] token span */
  nodeSpans: Record<string, [number, number]>;
}

function asIntArray(value: unknown, what: string, line: number): number[] {
  if (!Array.isArray(value) || value.some((v) => !Number.isInteger(v))) {
    throw new Error(`line ${line}: ${what} must be an array of integers`);
  }
  return value as number[];
}

/** Parse one linearization record, checking the track/span contracts. */
export function parseLinearization(obj: unknown, line: number): Linearization {
  if (typeof obj !== 'object' || obj === null) {
    throw new Error(`line ${line}: record must be an object`);
  }
  const record = obj as Record<string, unknown>;
  if (typeof record.doc !== 'string' || record.doc.length === 0) {
    throw new Error(`line ${line}: missing doc id`);
  }
  if (!Array.isArray(record.tokens) || record.tokens.some((t) => typeof t !== 'string')) {
    throw new Error(`line ${line}: tokens must be an array of strings`);
  }
  const tokens = record.tokens as string[];
  const typeIds = asIntArray(record.type_ids, 'type_ids', line);
  const depthIds = asIntArray(record.depth_ids, 'depth_ids', line);
  if (typeIds.length !== tokens.length || depthIds.length !== tokens.length) {
    throw new Error(`line ${line}: track lengths differ from token count`);
  }
  if (typeof record.node_spans !== 'object' || record.node_spans === null) {
    throw new Error(`line ${line}: missing node_spans`);
  }
  const nodeSpans: Record<string, [number, number]> = {};
  for (const [nodeId, span] of Object.entries(record.node_spans as Record<string, unknown>)) {
    if (!Array.isArray(span) || span.length !== 2 || !Number.isInteger(span[0]) || !Number.isInteger(span[1])) {
      throw new Error(`line ${line}: span of ${nodeId} must be [first, last]`);
    }
    const [first, last] = span as [number, number];
    if (first < 0 || last < first || last >= tokens.length) {
      throw new Error(`line ${line}: span of ${nodeId} out of bounds`);
    }
    nodeSpans[nodeId] = [first, last];
  }
  return { doc: record.doc, tokens, typeIds, depthIds, nodeSpans };
}

export function readLinearizations(path: string): Linearization[] {
  const out: Linearization[] = [];
  const seen = new Set<string>();
  const lines = readFileSync(path, 'utf-8').split('\n');
  for (let i = 0; i < lines.length; i++) {
    if (lines[i].trim().length === 0) continue;
    let obj: unknown;
    try {
      obj = JSON.parse(lines[i]);
    } catch {
      throw new Error(`${path}: line ${i + 1}: invalid JSON`);
    }
    const lin = parseLinearization(obj, i + 1);
    if (seen.has(lin.doc)) {
      throw new Error(`${path}: duplicate document ${JSON.stringify(lin.doc)}`);
    }
    seen.add(lin.doc);
    out.push(lin);
  }
  return out;
}

export interface VocabularyManifest {
  tokens: string[];
  separator: string;
  types: Record<string, string>;
  depths: string[];
}

/** The manifest lists the 25 structural symbols to register as atomic. */
export function readVocabulary(path: string): VocabularyManifest {
  const obj = JSON.parse(readFileSync(path, 'utf-8')) as Record<string, unknown>;
  const tokens = obj.tokens;
  if (!Array.isArray(tokens) || tokens.some((t) => typeof t !== 'string')) {
    throw new Error(`${path}: tokens must be an array of strings`);
  }
  if (new Set(tokens).size !== tokens.length) {
    throw new Error(`${path}: duplicate vocabulary symbols`);
  }
  if (typeof obj.separator !== 'string' || typeof obj.types !== 'object' || obj.types === null || !Array.isArray(obj.depths)) {
    throw new Error(`${path}: malformed vocabulary manifest`);
  }
  return {
    tokens: tokens as string[],
    separator: obj.separator,
    types: obj.types as Record<string, string>,
    depths: obj.depths as string[],
  };
}
