/**
 * Binary bank formats shared with the core toolkit.
 *
 * Feature bank:   "FSHB" | version u32 | d u32 | class count u32 |
 *                 per class: class_id (len u32 + utf8), split u8, n u32, n*d f32
 * Semantic bank:  "FSSB" | version u32 | m u32 | entry count u32 |
 *                 per entry: class_id, m f32
 * Activation map: "FSAM" | version u32 | entry count u32 |
 *                 per entry: sample_id, class_id, H u32, W u32, H*W f32
 *
 * All integers and floats are little-endian.
 */
import { renameSync, writeFileSync, readFileSync } from 'node:fs'

export const FORMAT_VERSION = 1

export type Split = 'base' | 'validation' | 'novel'

const SPLIT_CODE: Record<Split, number> = { base: 0, validation: 1, novel: 2 }
const SPLIT_NAME: Split[] = ['base', 'validation', 'novel']

export interface FeatureClass {
  classId: string
  split: Split
  /** row-major n x dim */
  features: Float32Array
  rows: number
}

export interface FeatureBank {
  dim: number
  classes: FeatureClass[]
}

export interface SemanticBank {
  dim: number
  entries: Map<string, Float32Array>
}

export interface ActivationMapSet {
  entries: Map<string, { sampleId: string; classId: string; height: number; width: number; values: Float32Array }>
}

export function mapKey(sampleId: string, classId: string): string {
  return `${sampleId} ${classId}`
}

class ByteWriter {
  private chunks: Buffer[] = []

  magic(s: string) {
    this.chunks.push(Buffer.from(s, 'ascii'))
  }

  u32(value: number) {
    const b = Buffer.alloc(4)
    b.writeUInt32LE(value)
    this.chunks.push(b)
  }

  u8(value: number) {
    this.chunks.push(Buffer.from([value]))
  }

  string(s: string) {
    const raw = Buffer.from(s, 'utf-8')
    this.u32(raw.length)
    this.chunks.push(raw)
  }

  f32(values: Float32Array) {
    const b = Buffer.alloc(values.length * 4)
    for (let i = 0; i < values.length; i++) b.writeFloatLE(values[i], i * 4)
    this.chunks.push(b)
  }

  concat(): Buffer {
    return Buffer.concat(this.chunks)
  }
}

class ByteReader {
  private pos = 0

  constructor(
    private data: Buffer,
    private path: string,
  ) {}

  private take(n: number): Buffer {
    if (this.pos + n > this.data.length) {
      throw new Error(`truncated payload in ${this.path} at offset ${this.pos}`)
    }
    const out = this.data.subarray(this.pos, this.pos + n)
    this.pos += n
    return out
  }

  magic(): string {
    return this.take(4).toString('ascii')
  }

  u32(): number {
    return this.take(4).readUInt32LE()
  }

  u8(): number {
    return this.take(1)[0]
  }

  string(): string {
    return this.take(this.u32()).toString('utf-8')
  }

  f32(count: number): Float32Array {
    const raw = this.take(count * 4)
    const out = new Float32Array(count)
    for (let i = 0; i < count; i++) out[i] = raw.readFloatLE(i * 4)
    return out
  }

  atEnd(): boolean {
    return this.pos === this.data.length
  }
}

/** Write via temp file + rename so concurrent readers never see partial banks. */
function atomicWrite(path: string, data: Buffer) {
  const tmp = `${path}.tmp-${process.pid}`
  writeFileSync(tmp, data)
  renameSync(tmp, path)
}

export function writeFeatureBank(bank: FeatureBank, path: string) {
  const w = new ByteWriter()
  w.magic('FSHB')
  w.u32(FORMAT_VERSION)
  w.u32(bank.dim)
  w.u32(bank.classes.length)
  for (const cls of bank.classes) {
    if (cls.features.length !== cls.rows * bank.dim) {
      throw new Error(`class ${cls.classId}: feature length ${cls.features.length} != ${cls.rows}x${bank.dim}`)
    }
    for (const v of cls.features) {
      if (!Number.isFinite(v) || v < 0) {
        throw new Error(`class ${cls.classId}: features must be finite and non-negative`)
      }
    }
    w.string(cls.classId)
    w.u8(SPLIT_CODE[cls.split])
    w.u32(cls.rows)
    w.f32(cls.features)
  }
  atomicWrite(path, w.concat())
}

export function writeSemanticBank(bank: SemanticBank, path: string) {
  const w = new ByteWriter()
  w.magic('FSSB')
  w.u32(FORMAT_VERSION)
  w.u32(bank.dim)
  w.u32(bank.entries.size)
  for (const [classId, vec] of bank.entries) {
    if (vec.length !== bank.dim) {
      throw new Error(`class ${classId}: vector length ${vec.length} != ${bank.dim}`)
    }
    w.string(classId)
    w.f32(vec)
  }
  atomicWrite(path, w.concat())
}

export function writeActivationMaps(maps: ActivationMapSet, path: string) {
  const w = new ByteWriter()
  w.magic('FSAM')
  w.u32(FORMAT_VERSION)
  w.u32(maps.entries.size)
  for (const entry of maps.entries.values()) {
    for (const v of entry.values) {
      if (!(v >= 0 && v <= 1)) {
        throw new Error(`map ${entry.sampleId}/${entry.classId}: values must lie in [0, 1]`)
      }
    }
    w.string(entry.sampleId)
    w.string(entry.classId)
    w.u32(entry.height)
    w.u32(entry.width)
    w.f32(entry.values)
  }
  atomicWrite(path, w.concat())
}

function checkVersion(r: ByteReader, path: string) {
  const version = r.u32()
  if (version !== FORMAT_VERSION) {
    throw new Error(`unsupported format version ${version} in ${path}`)
  }
}

export function readFeatureBank(path: string): FeatureBank {
  const r = new ByteReader(readFileSync(path), path)
  if (r.magic() !== 'FSHB') throw new Error(`unrecognized format: ${path}`)
  checkVersion(r, path)
  const dim = r.u32()
  const count = r.u32()
  const classes: FeatureClass[] = []
  for (let i = 0; i < count; i++) {
    const classId = r.string()
    const split = SPLIT_NAME[r.u8()]
    if (split === undefined) throw new Error(`bad split byte for ${classId} in ${path}`)
    const rows = r.u32()
    classes.push({ classId, split, rows, features: r.f32(rows * dim) })
  }
  if (!r.atEnd()) throw new Error(`trailing bytes in ${path}`)
  return { dim, classes }
}

export function readSemanticBank(path: string): SemanticBank {
  const r = new ByteReader(readFileSync(path), path)
  if (r.magic() !== 'FSSB') throw new Error(`unrecognized format: ${path}`)
  checkVersion(r, path)
  const dim = r.u32()
  const count = r.u32()
  const entries = new Map<string, Float32Array>()
  for (let i = 0; i < count; i++) {
    entries.set(r.string(), r.f32(dim))
  }
  if (!r.atEnd()) throw new Error(`trailing bytes in ${path}`)
  return { dim, entries }
}

export function readActivationMaps(path: string): ActivationMapSet {
  const r = new ByteReader(readFileSync(path), path)
  if (r.magic() !== 'FSAM') throw new Error(`unrecognized format: ${path}`)
  checkVersion(r, path)
  const count = r.u32()
  const entries: ActivationMapSet['entries'] = new Map()
  for (let i = 0; i < count; i++) {
    const sampleId = r.string()
    const classId = r.string()
    const height = r.u32()
    const width = r.u32()
    entries.set(mapKey(sampleId, classId), {
      sampleId,
      classId,
      height,
      width,
      values: r.f32(height * width),
    })
  }
  if (!r.atEnd()) throw new Error(`trailing bytes in ${path}`)
  return { entries }
}
