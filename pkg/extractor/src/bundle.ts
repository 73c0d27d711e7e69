/**
 * Representation-bundle writers, matching the toolkit interchange
 * formats bit for bit.
 *
 * Text: "RB1 <doc_id> <L> <d> <n_tokens>" then L*n_tokens lines of d
 * decimal floats (layer-major, then token-major). Each value is the
 * shortest decimal that parses back to the identical float64 - and the
 * stored values are exact float32s, so the float64 round trip is also
 * the float32 round trip.
 *
 * Binary: magic "RBIN", three little-endian uint32 counts (L, d,
 * n_tokens), then the values as little-endian float32 in the same
 * order. Note the header puts d before n_tokens while the payload is
 * laid out (L, n_tokens, d).
 */

const TEXT_MAGIC = 'RB1';
const BINARY_MAGIC = 'RBIN';

export interface BundleArray {
  docId: string;
  layerCount: number;
  nTokens: number;
  hiddenSize: number;
  /** length layerCount * nTokens * hiddenSize, (L, n, d) C order */
  values: Float32Array;
}

export function makeBundle(docId: string, layerCount: number, nTokens: number, hiddenSize: number, values: Float32Array): BundleArray {
  if (values.length !== layerCount * nTokens * hiddenSize) {
    throw new Error(`bundle ${docId}: ${values.length} values for shape (${layerCount}, ${nTokens}, ${hiddenSize})`);
  }
  if (layerCount < 1 || nTokens < 1 || hiddenSize < 1) {
    throw new Error(`bundle ${docId}: empty axis in (${layerCount}, ${nTokens}, ${hiddenSize})`);
  }
  for (let i = 0; i < values.length; i++) {
    if (!Number.isFinite(values[i])) {
      throw new Error(`bundle ${docId}: non-finite value at ${i}`);
    }
  }
  return { docId, layerCount, nTokens, hiddenSize, values };
}

/** Shortest exact decimal for a float value; keeps the sign of -0. */
export function formatValue(value: number): string {
  if (Object.is(value, -0)) return '-0.0';
  const text = value.toString();
  // ensure a float-looking literal for whole numbers, matching the reader's expectations
  return /^-?\d+$/.test(text) ? `${text}.0` : text;
}

export function bundleText(bundle: BundleArray): string {
  const { docId, layerCount, nTokens, hiddenSize, values } = bundle;
  const lines: string[] = [`${TEXT_MAGIC} ${docId} ${layerCount} ${hiddenSize} ${nTokens}`];
  for (let row = 0; row < layerCount * nTokens; row++) {
    const parts: string[] = new Array(hiddenSize);
    for (let c = 0; c < hiddenSize; c++) {
      parts[c] = formatValue(values[row * hiddenSize + c]);
    }
    lines.push(parts.join(' '));
  }
  return lines.join('\n') + '\n';
}

export function bundleBinary(bundle: BundleArray): Buffer {
  const { layerCount, nTokens, hiddenSize, values } = bundle;
  const out = Buffer.alloc(4 + 12 + 4 * values.length);
  out.write(BINARY_MAGIC, 0, 'ascii');
  out.writeUInt32LE(layerCount, 4);
  out.writeUInt32LE(hiddenSize, 8);
  out.writeUInt32LE(nTokens, 12);
  for (let i = 0; i < values.length; i++) {
    out.writeFloatLE(values[i], 16 + 4 * i);
  }
  return out;
}

export const TEXT_SUFFIX = '.rb';
export const BINARY_SUFFIX = '.rbin';
