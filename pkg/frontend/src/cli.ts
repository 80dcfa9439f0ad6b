#!/usr/bin/env node
/** Command-line entry: extract features / semantics / activation maps. */
import { existsSync } from 'node:fs'
import { join } from 'node:path'

import * as tf from '@tensorflow/tfjs'
import yargs from 'yargs'
import { hideBin } from 'yargs/helpers'

import { writeActivationMaps, writeFeatureBank, writeSemanticBank } from './format.js'
import { computeActivationMaps, MapRequest } from './gradcam.js'
import { loadModelFromDisk } from './model.js'
import { loadExtractSpec, ExtractSpec } from './spec.js'
import { buildSemanticBank } from './semantics.js'
import { extractDataset, loadPng } from './visual.js'

async function loadModel(spec: ExtractSpec): Promise<tf.LayersModel> {
  if (!spec.modelPath || !existsSync(spec.modelPath)) {
    throw new Error(`model weights not found: ${spec.modelPath ?? '(model_path unset)'}`)
  }
  return loadModelFromDisk(spec.modelPath)
}

function requireOutput(path: string | undefined, name: string): string {
  if (!path) throw new Error(`spec is missing outputs.${name}`)
  return path
}

export async function runFeatures(specPath: string): Promise<string> {
  const spec = loadExtractSpec(specPath)
  const out = requireOutput(spec.outputs.features, 'features')
  const model = await loadModel(spec)
  const { bank } = extractDataset(model, spec.datasetRoot, spec.splits)
  writeFeatureBank(bank, out)
  return out
}

export async function runSemantics(specPath: string): Promise<string> {
  const spec = loadExtractSpec(specPath)
  const out = requireOutput(spec.outputs.semantics, 'semantics')
  const labels = [...spec.splits.keys()].sort()
  writeSemanticBank(buildSemanticBank(labels, spec.definitions, spec.semanticDim), out)
  return out
}

export async function runMaps(specPath: string): Promise<string> {
  const spec = loadExtractSpec(specPath)
  const out = requireOutput(spec.outputs.maps, 'maps')
  const model = await loadModel(spec)
  const baseIds = [...spec.splits.entries()]
    .filter(([, split]) => split === 'base')
    .map(([id]) => id)
    .sort()
  const requests: MapRequest[] = spec.mapPairs.map((pair) => {
    const classIndex = baseIds.indexOf(pair.classId)
    if (classIndex < 0) throw new Error(`unknown base class: ${pair.classId}`)
    const imagePath = join(spec.datasetRoot, pair.sampleId)
    if (!existsSync(imagePath)) throw new Error(`unknown sample: ${pair.sampleId}`)
    return {
      sampleId: pair.sampleId,
      classId: pair.classId,
      image: loadPng(imagePath).expandDims(0) as tf.Tensor4D,
      classIndex,
    }
  })
  const maps = computeActivationMaps(model, requests)
  requests.forEach((r) => r.image.dispose())
  writeActivationMaps(maps, out)
  return out
}

export async function main(argv: string[]): Promise<number> {
  const commands: Record<string, (spec: string) => Promise<string>> = {
    features: runFeatures,
    semantics: runSemantics,
    maps: runMaps,
  }
  const parsed = await yargs(argv)
    .command('features', 'extract visual features into a feature bank')
    .command('semantics', 'encode class labels into a semantic bank')
    .command('maps', 'compute class activation maps')
    .option('spec', { type: 'string', demandOption: true, describe: 'extraction spec JSON' })
    .demandCommand(1)
    .strict()
    .parse()
  const command = String(parsed._[0])
  const handler = commands[command]
  if (!handler) {
    console.error(`error: unknown command ${command}`)
    return 1
  }
  try {
    const out = await handler(parsed.spec as string)
    console.log(`wrote ${out}`)
    return 0
  } catch (err) {
    console.error(`error: ${err instanceof Error ? err.message : err}`)
    return 1
  }
}

const invokedDirectly = process.argv[1]?.endsWith('cli.js')
if (invokedDirectly) {
  main(hideBin(process.argv)).then((code) => {
    process.exitCode = code
  })
}
