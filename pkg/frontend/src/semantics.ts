/**
 * Deterministic class-label encoder.
 *
 * Each token maps to a fixed pseudo-random embedding derived from a hash of
 * the token text; a class vector is the mean over token embeddings of
 * "label + definition" when a definition is available, else the label alone.
 * Fully offline and reproducible: the same text always yields the same vector.
 */
import type { SemanticBank } from './format.js'

function fnv1a(text: string): number {
  let h = 0x811c9dc5
  for (let i = 0; i < text.length; i++) {
    h ^= text.charCodeAt(i)
    h = Math.imul(h, 0x01000193)
  }
  return h >>> 0
}

/** mulberry32: small deterministic PRNG over a 32-bit state. */
function mulberry32(seed: number): () => number {
  let state = seed >>> 0
  return () => {
    state = (state + 0x6d2b79f5) >>> 0
    let t = state
    t = Math.imul(t ^ (t >>> 15), t | 1)
    t ^= t + Math.imul(t ^ (t >>> 7), t | 61)
    return ((t ^ (t >>> 14)) >>> 0) / 4294967296
  }
}

export function tokenize(text: string): string[] {
  return text
    .toLowerCase()
    .split(/[^a-z0-9]+/)
    .filter((t) => t.length > 0)
}

function tokenEmbedding(token: string, dim: number): Float32Array {
  const next = mulberry32(fnv1a(token))
  const out = new Float32Array(dim)
  for (let i = 0; i < dim; i++) {
    // Box-Muller: approximately standard-normal coordinates.
    const u = Math.max(next(), 1e-12)
    out[i] = Math.sqrt(-2 * Math.log(u)) * Math.cos(2 * Math.PI * next())
  }
  return out
}

/** Mean-pooled token embeddings, without L2 normalization. */
export function encodeText(text: string, dim: number): Float32Array {
  const tokens = tokenize(text)
  if (tokens.length === 0) {
    throw new Error('cannot encode empty text')
  }
  const out = new Float32Array(dim)
  for (const token of tokens) {
    const emb = tokenEmbedding(token, dim)
    for (let i = 0; i < dim; i++) out[i] += emb[i]
  }
  for (let i = 0; i < dim; i++) out[i] /= tokens.length
  return out
}

export function buildSemanticBank(
  labels: string[],
  definitions: Map<string, string>,
  dim: number,
): SemanticBank {
  const entries = new Map<string, Float32Array>()
  for (const label of labels) {
    const definition = definitions.get(label)
    const text = definition ? `${label} ${definition}` : label
    entries.set(label, encodeText(text, dim))
  }
  return { dim, entries }
}
