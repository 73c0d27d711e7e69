/**
 * Deterministic seeded transformer encoder.
 *
 * A small bidirectional encoder whose weights are derived entirely from
 * (seed, label) keys: the same seed always yields the same forward
 * pass, with no weight files and no dropout. Two families are provided:
 * 'mini' uses post-layer-norm blocks with learned absolute positions,
 * 'scaled' uses pre-layer-norm blocks with a relative attention bias
 * and larger-scale embeddings.
 *
 * The forward pass returns layers + 1 states: the embedding output
 * (token + position + structural additions) followed by each block.
 */

import type { EncoderPreset } from './config.js';
import { FAMILY_INIT_STD } from './config.js';
import { SeededRng } from './rng.js';

const LN_EPS = 1e-5;
const REL_CLIP = 8; // relative positions beyond +/-8 share the edge bucket

interface BlockWeights {
  wq: Float64Array;
  wk: Float64Array;
  wv: Float64Array;
  wo: Float64Array;
  w1: Float64Array;
  b1: Float64Array;
  w2: Float64Array;
  b2: Float64Array;
}

/** y = x @ W with W stored row-major as [dIn][dOut]. */
function matvec(x: Float64Array, w: Float64Array, dIn: number, dOut: number, bias?: Float64Array): Float64Array {
  const y = bias ? Float64Array.from(bias) : new Float64Array(dOut);
  for (let i = 0; i < dIn; i++) {
    const xi = x[i];
    if (xi === 0) continue;
    const row = i * dOut;
    for (let j = 0; j < dOut; j++) {
      y[j] += xi * w[row + j];
    }
  }
  return y;
}

function layerNorm(x: Float64Array): Float64Array {
  const n = x.length;
  let mean = 0;
  for (let i = 0; i < n; i++) mean += x[i];
  mean /= n;
  let variance = 0;
  for (let i = 0; i < n; i++) {
    const dev = x[i] - mean;
    variance += dev * dev;
  }
  variance /= n;
  const scale = 1 / Math.sqrt(variance + LN_EPS);
  const out = new Float64Array(n);
  for (let i = 0; i < n; i++) out[i] = (x[i] - mean) * scale;
  return out;
}

function initMatrix(rng: SeededRng, dIn: number, dOut: number): Float64Array {
  return rng.gaussianVector(dIn * dOut, 1 / Math.sqrt(dIn));
}

export class Encoder {
  readonly preset: EncoderPreset;
  readonly seed: number;
  /** Structural tables are scaled by this; token embeddings use the family default. */
  readonly structuralStd: number;

  private readonly tokenStd: number;
  private readonly blocks: BlockWeights[];
  private readonly relBias: Float64Array[]; // per head, 2*REL_CLIP+1 buckets
  private readonly embedCache = new Map<string, Float64Array>();
  private readonly positionCache: Float64Array[] = [];
  private readonly typeTable = new Map<number, Float64Array>();
  private readonly depthTable = new Map<number, Float64Array>();

  constructor(preset: EncoderPreset, seed: number, structuralStd?: number) {
    if (preset.hiddenSize % preset.heads !== 0) {
      throw new Error(`hidden size ${preset.hiddenSize} not divisible by ${preset.heads} heads`);
    }
    this.preset = preset;
    this.seed = seed;
    this.tokenStd = FAMILY_INIT_STD[preset.family];
    this.structuralStd = structuralStd ?? this.tokenStd;

    const d = preset.hiddenSize;
    this.blocks = [];
    for (let layer = 0; layer < preset.layers; layer++) {
      this.blocks.push({
        wq: initMatrix(new SeededRng(seed, 'block', layer, 'wq'), d, d),
        wk: initMatrix(new SeededRng(seed, 'block', layer, 'wk'), d, d),
        wv: initMatrix(new SeededRng(seed, 'block', layer, 'wv'), d, d),
        wo: initMatrix(new SeededRng(seed, 'block', layer, 'wo'), d, d),
        w1: initMatrix(new SeededRng(seed, 'block', layer, 'w1'), d, preset.ffSize),
        b1: new Float64Array(preset.ffSize),
        w2: initMatrix(new SeededRng(seed, 'block', layer, 'w2'), preset.ffSize, d),
        b2: new Float64Array(d),
      });
    }
    this.relBias = [];
    if (preset.family === 'scaled') {
      for (let head = 0; head < preset.heads; head++) {
        this.relBias.push(new SeededRng(seed, 'rel', head).gaussianVector(2 * REL_CLIP + 1, 0.2));
      }
    }
  }

  /** Embedding row for a subword symbol; lazily derived, order-free. */
  tokenEmbedding(symbol: string): Float64Array {
    let row = this.embedCache.get(symbol);
    if (!row) {
      row = new SeededRng(this.seed, 'emb', symbol).gaussianVector(this.preset.hiddenSize, this.tokenStd);
      this.embedCache.set(symbol, row);
    }
    return row;
  }

  private positionEmbedding(index: number): Float64Array {
    while (this.positionCache.length <= index) {
      this.positionCache.push(
        new SeededRng(this.seed, 'pos', this.positionCache.length).gaussianVector(this.preset.hiddenSize, this.tokenStd)
      );
    }
    return this.positionCache[index];
  }

  /** Structural-embedding row for a type id. */
  typeRow(id: number): Float64Array {
    let row = this.typeTable.get(id);
    if (!row) {
      row = new SeededRng(this.seed, 'type', id).gaussianVector(this.preset.hiddenSize, this.structuralStd);
      this.typeTable.set(id, row);
    }
    return row;
  }

  /** Structural-embedding row for a depth bucket. */
  depthRow(id: number): Float64Array {
    let row = this.depthTable.get(id);
    if (!row) {
      row = new SeededRng(this.seed, 'depth', id).gaussianVector(this.preset.hiddenSize, this.structuralStd);
      this.depthTable.set(id, row);
    }
    return row;
  }

  /**
   * Run the frozen forward pass.
   *
   * @param pieces subword symbols in stream order
   * @param structural optional per-piece additive rows (structural embeddings)
   * @returns states[layer][piece] with layers + 1 entries
   */
  forward(pieces: string[], structural: Array<Float64Array | null> | null = null): Float64Array[][] {
    const d = this.preset.hiddenSize;
    const n = pieces.length;
    if (structural !== null && structural.length !== n) {
      throw new Error(`structural rows (${structural.length}) differ from piece count (${n})`);
    }

    let current: Float64Array[] = [];
    for (let i = 0; i < n; i++) {
      const row = Float64Array.from(this.tokenEmbedding(pieces[i]));
      if (this.preset.family === 'mini') {
        const pos = this.positionEmbedding(i);
        for (let j = 0; j < d; j++) row[j] += pos[j];
      }
      const extra = structural?.[i];
      if (extra) {
        for (let j = 0; j < d; j++) row[j] += extra[j];
      }
      current.push(row);
    }

    const states: Float64Array[][] = [current.map((r) => Float64Array.from(r))];
    for (const block of this.blocks) {
      current = this.runBlock(current, block);
      states.push(current.map((r) => Float64Array.from(r)));
    }
    return states;
  }

  private runBlock(x: Float64Array[], block: BlockWeights): Float64Array[] {
    const preLn = this.preset.family === 'scaled';
    const attnIn = preLn ? x.map(layerNorm) : x;
    const attnOut = this.attention(attnIn, block);

    const afterAttn: Float64Array[] = [];
    for (let i = 0; i < x.length; i++) {
      const sum = new Float64Array(x[i].length);
      for (let j = 0; j < sum.length; j++) sum[j] = x[i][j] + attnOut[i][j];
      afterAttn.push(preLn ? sum : layerNorm(sum));
    }

    const ffIn = preLn ? afterAttn.map(layerNorm) : afterAttn;
    const out: Float64Array[] = [];
    for (let i = 0; i < afterAttn.length; i++) {
      const hidden = matvec(ffIn[i], block.w1, this.preset.hiddenSize, this.preset.ffSize, block.b1);
      for (let j = 0; j < hidden.length; j++) {
        if (hidden[j] < 0) hidden[j] = 0;
      }
      const ff = matvec(hidden, block.w2, this.preset.ffSize, this.preset.hiddenSize, block.b2);
      const sum = new Float64Array(ff.length);
      for (let j = 0; j < sum.length; j++) sum[j] = afterAttn[i][j] + ff[j];
      out.push(preLn ? sum : layerNorm(sum));
    }
    return out;
  }

  private attention(x: Float64Array[], block: BlockWeights): Float64Array[] {
    const { hiddenSize: d, heads } = this.preset;
    const headDim = d / heads;
    const n = x.length;
    const q = x.map((row) => matvec(row, block.wq, d, d));
    const k = x.map((row) => matvec(row, block.wk, d, d));
    const v = x.map((row) => matvec(row, block.wv, d, d));

    const mixed: Float64Array[] = x.map(() => new Float64Array(d));
    const scale = 1 / Math.sqrt(headDim);
    const scores = new Float64Array(n);
    for (let head = 0; head < heads; head++) {
      const at = head * headDim;
      for (let i = 0; i < n; i++) {
        let max = -Infinity;
        for (let j = 0; j < n; j++) {
          let dot = 0;
          for (let c = 0; c < headDim; c++) dot += q[i][at + c] * k[j][at + c];
          dot *= scale;
          if (this.relBias.length > 0) {
            const offset = Math.max(-REL_CLIP, Math.min(REL_CLIP, j - i));
            dot += this.relBias[head][offset + REL_CLIP];
          }
          scores[j] = dot;
          if (dot > max) max = dot;
        }
        let denom = 0;
        for (let j = 0; j < n; j++) {
          scores[j] = Math.exp(scores[j] - max);
          denom += scores[j];
        }
        for (let j = 0; j < n; j++) {
          const weight = scores[j] / denom;
          if (weight === 0) continue;
          for (let c = 0; c < headDim; c++) {
            mixed[i][at + c] += weight * v[j][at + c];
          }
        }
      }
    }
    return mixed.map((row) => matvec(row, block.wo, d, d));
  }
}
