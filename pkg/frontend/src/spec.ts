/** Extraction job description loaded from a JSON file. */
import { readFileSync } from 'node:fs'

import type { Split } from './format.js'

export interface ExtractSpec {
  /** directory containing one subdirectory of PNG images per class */
  datasetRoot: string
  /** class_id -> split assignment */
  splits: Map<string, Split>
  /** path to a saved layers-model model.json */
  modelPath?: string
  /** semantic vector dimensionality */
  semanticDim: number
  /** optional class_id -> definition text used when encoding labels */
  definitions: Map<string, string>
  /** (sample_id, base class_id) pairs to compute activation maps for */
  mapPairs: Array<{ sampleId: string; classId: string }>
  outputs: { features?: string; semantics?: string; maps?: string }
}

export function loadExtractSpec(path: string): ExtractSpec {
  const raw = JSON.parse(readFileSync(path, 'utf-8'))
  const splitDef = raw.splits ?? {}
  const splits = new Map<string, Split>()
  for (const split of ['base', 'validation', 'novel'] as Split[]) {
    for (const classId of splitDef[split] ?? []) {
      if (splits.has(classId)) {
        throw new Error(`class ${classId} assigned to more than one split`)
      }
      splits.set(classId, split)
    }
  }
  if (splits.size === 0) {
    throw new Error(`no classes listed in splits of ${path}`)
  }
  const definitions = new Map<string, string>(Object.entries(raw.definitions ?? {}))
  const mapPairs = (raw.map_pairs ?? []).map((p: { sample_id: string; class_id: string }) => ({
    sampleId: p.sample_id,
    classId: p.class_id,
  }))
  return {
    datasetRoot: raw.dataset_root ?? '.',
    splits,
    modelPath: raw.model_path,
    semanticDim: raw.semantic_dim ?? 64,
    definitions,
    mapPairs,
    outputs: {
      features: raw.outputs?.features,
      semantics: raw.outputs?.semantics,
      maps: raw.outputs?.maps,
    },
  }
}
