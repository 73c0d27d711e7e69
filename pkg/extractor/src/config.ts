/**
 * Extractor configuration: which encoder, which infusion descriptor,
 * structural-embedding init, length cap, output format.
 *
 * The descriptor table mirrors the toolkit's linearization configs; the
 * extractor needs the two pathway fields to know whether the stream
 * carries special tokens (vocabulary extension required) and which
 * structural table to add at the embedding layer.
 */

export type TokenPathway = 'none' | 'sep' | 'type' | 'depth';
export type EmbeddingPathway = 'none' | 'type' | 'depth';
export type OutputFormat = 'text' | 'binary';

export const DESCRIPTORS: Record<string, [TokenPathway, EmbeddingPathway]> = {
  vanilla: ['none', 'none'],
  'tok-sep': ['sep', 'none'],
  'tok-type': ['type', 'none'],
  'tok-depth': ['depth', 'none'],
  'emb-type': ['none', 'type'],
  'emb-depth': ['none', 'depth'],
  'emb-type-tok-type': ['type', 'type'],
  'emb-type-tok-depth': ['depth', 'type'],
  'emb-depth-tok-type': ['type', 'depth'],
  'emb-depth-tok-depth': ['depth', 'depth'],
};

/** Track value ranges fixed by the linearization format. */
export const TYPE_ID_COUNT = 5; // 0 = none, 1..4 = node types
export const DEPTH_BUCKETS = 20;

export type EncoderFamily = 'mini' | 'scaled';

export interface EncoderPreset {
  name: string;
  family: EncoderFamily;
  layers: number;
  hiddenSize: number;
  heads: number;
  ffSize: number;
}

export const ENCODERS: Record<string, EncoderPreset> = {
  mini: { name: 'mini', family: 'mini', layers: 4, hiddenSize: 32, heads: 4, ffSize: 64 },
  'mini-2': { name: 'mini-2', family: 'mini', layers: 2, hiddenSize: 32, heads: 4, ffSize: 64 },
  scaled: { name: 'scaled', family: 'scaled', layers: 2, hiddenSize: 48, heads: 4, ffSize: 96 },
};

/**
 * Default structural-embedding init std per family, chosen to match the
 * scale of each family's token embeddings so the added signal neither
 * vanishes nor dominates.
 */
export const FAMILY_INIT_STD: Record<EncoderFamily, number> = {
  mini: 0.0305,
  scaled: 4.875,
};

export interface ExtractorConfig {
  encoder: EncoderPreset;
  descriptor: string;
  tokenPathway: TokenPathway;
  embeddingPathway: EmbeddingPathway;
  initStd: number;
  maxLength: number;
  format: OutputFormat;
  seed: number;
}

export interface ExtractorOptions {
  encoder?: string;
  descriptor: string;
  initStd?: number;
  maxLength?: number;
  format?: OutputFormat;
  seed?: number;
}

export function resolveConfig(options: ExtractorOptions): ExtractorConfig {
  const encoderName = options.encoder ?? 'mini';
  const preset = ENCODERS[encoderName];
  if (!preset) {
    throw new Error(`unknown encoder ${JSON.stringify(encoderName)}; choose from ${Object.keys(ENCODERS).join(', ')}`);
  }
  const pathways = DESCRIPTORS[options.descriptor];
  if (!pathways) {
    throw new Error(`unknown config descriptor ${JSON.stringify(options.descriptor)}`);
  }
  const initStd = options.initStd ?? FAMILY_INIT_STD[preset.family];
  if (!(initStd > 0)) {
    throw new Error(`init std must be positive, got ${initStd}`);
  }
  const maxLength = options.maxLength ?? 512;
  if (!Number.isInteger(maxLength) || maxLength < 1) {
    throw new Error(`max length must be a positive integer, got ${maxLength}`);
  }
  const format = options.format ?? 'binary';
  if (format !== 'text' && format !== 'binary') {
    throw new Error(`unknown output format ${JSON.stringify(format)}`);
  }
  const seed = options.seed ?? 0;
  if (!Number.isInteger(seed)) {
    throw new Error(`seed must be an integer, got ${seed}`);
  }
  return {
    encoder: preset,
    descriptor: options.descriptor,
    tokenPathway: pathways[0],
    embeddingPathway: pathways[1],
    initStd,
    maxLength,
    format,
    seed,
  };
}
