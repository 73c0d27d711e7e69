/**
 * Deterministic subword splitter with a recorded token alignment.
 *
 * The toolkit's linearizations arrive as whole words; the encoder works
 * on smaller pieces. Each token is split at letter/digit/punctuation
 * boundaries, runs longer than the piece limit are chopped, and every
 * piece after the first carries a continuation prefix so "ing" the word
 * and "ing" the suffix get distinct embeddings. Tokens listed as atomic
 * (the structural vocabulary) are never split.
 */

export const CONTINUATION_PREFIX = '##';
export const DEFAULT_MAX_PIECE = 6;

export interface SubwordSplit {
  /** Pieces in stream order. */
  pieces: string[];
  /** First subword index per toolkit token. */
  firstSub: number[];
  /** Last subword index per toolkit token (inclusive). */
  lastSub: number[];
}

function charClass(ch: string): number {
  if (/[a-zA-Z]/.test(ch)) return 0;
  if (/[0-9]/.test(ch)) return 1;
  return 2;
}

/** Split one token into raw fragments (no continuation marking). */
function fragment(token: string, maxPiece: number): string[] {
  const runs: string[] = [];
  let current = '';
  for (const ch of token) {
    if (current.length === 0 || charClass(ch) === charClass(current[0])) {
      current += ch;
    } else {
      runs.push(current);
      current = ch;
    }
  }
  if (current.length > 0) runs.push(current);

  const out: string[] = [];
  for (const run of runs) {
    for (let at = 0; at < run.length; at += maxPiece) {
      out.push(run.slice(at, at + maxPiece));
    }
  }
  return out;
}

/**
 * Split a token stream, recording where each token's subwords start and
 * end. The alignment is monotone and total by construction; a token
 * that produces no pieces is an alignment failure and a hard error.
 */
export function splitTokens(
  tokens: string[],
  atomic: ReadonlySet<string> = new Set(),
  maxPiece: number = DEFAULT_MAX_PIECE
): SubwordSplit {
  if (maxPiece < 1) {
    throw new Error(`piece limit must be >= 1, got ${maxPiece}`);
  }
  const pieces: string[] = [];
  const firstSub: number[] = [];
  const lastSub: number[] = [];
  for (let i = 0; i < tokens.length; i++) {
    const token = tokens[i];
    const parts = atomic.has(token) ? [token] : fragment(token, maxPiece);
    if (parts.length === 0) {
      throw new Error(`alignment failure: token ${i} (${JSON.stringify(token)}) has no subwords`);
    }
    firstSub.push(pieces.length);
    for (let k = 0; k < parts.length; k++) {
      pieces.push(k === 0 ? parts[k] : CONTINUATION_PREFIX + parts[k]);
    }
    lastSub.push(pieces.length - 1);
  }
  return { pieces, firstSub, lastSub };
}

/** Undo the continuation marking, rejoining pieces into their token. */
export function joinPieces(split: SubwordSplit, tokenIndex: number): string {
  let out = '';
  for (let s = split.firstSub[tokenIndex]; s <= split.lastSub[tokenIndex]; s++) {
    const piece = split.pieces[s];
    out += s === split.firstSub[tokenIndex] ? piece : piece.slice(CONTINUATION_PREFIX.length);
  }
  return out;
}
