/**
 * Deterministic seeded randomness keyed by strings.
 *
 * Weights, embeddings, and structural tables are each derived from a
 * (seed, ...labels) key, so generation order never matters: the row for
 * a symbol is the same whether it is the first or the thousandth one
 * requested. Gaussians come from a 12-uniform sum rather than
 * Box-Muller to stay off Math.log/Math.cos, whose results are not
 * pinned down by the JS spec.
 */

/** xmur3 string hash, used to fold the key into PRNG state. */
function hashString(input: string): number {
  let h = 1779033703 ^ input.length;
  for (let i = 0; i < input.length; i++) {
    h = Math.imul(h ^ input.charCodeAt(i), 3432918353);
    h = (h << 13) | (h >>> 19);
  }
  h = Math.imul(h ^ (h >>> 16), 2246822507);
  h = Math.imul(h ^ (h >>> 13), 3266489909);
  return (h ^= h >>> 16) >>> 0;
}

export class SeededRng {
  private state: number;

  constructor(...key: Array<string | number>) {
    // unit separator keeps ("ab","c") distinct from ("a","bc")
    this.state = hashString(key.map(String).join('\x1f'));
  }

  /** mulberry32: uniform in [0, 1). */
  next(): number {
    this.state = (this.state + 0x6d2b79f5) >>> 0;
    let t = this.state;
    t = Math.imul(t ^ (t >>> 15), t | 1);
    t ^= t + Math.imul(t ^ (t >>> 7), t | 61);
    return ((t ^ (t >>> 14)) >>> 0) / 4294967296;
  }

  /** Approximate standard normal: sum of 12 uniforms minus 6. */
  gaussian(): number {
    let sum = 0;
    for (let i = 0; i < 12; i++) {
      sum += this.next();
    }
    return sum - 6;
  }

  /** A fresh array of gaussians scaled by std. */
  gaussianVector(length: number, std: number): Float64Array {
    const out = new Float64Array(length);
    for (let i = 0; i < length; i++) {
      out[i] = this.gaussian() * std;
    }
    return out;
  }
}
