/** Load/save tfjs layers models on disk without the native node bindings. */
import { readFileSync, writeFileSync, mkdirSync } from 'node:fs'
import { dirname, join } from 'node:path'

import * as tf from '@tensorflow/tfjs'

/** Read a model.json plus its weight shards into a LayersModel. */
export async function loadModelFromDisk(modelJsonPath: string): Promise<tf.LayersModel> {
  const dir = dirname(modelJsonPath)
  const manifest = JSON.parse(readFileSync(modelJsonPath, 'utf-8'))
  const weightSpecs: tf.io.WeightsManifestEntry[] = []
  const shards: Buffer[] = []
  for (const group of manifest.weightsManifest ?? []) {
    weightSpecs.push(...group.weights)
    for (const path of group.paths) {
      shards.push(readFileSync(join(dir, path)))
    }
  }
  const weightData = Buffer.concat(shards)
  return tf.loadLayersModel(
    tf.io.fromMemory({
      modelTopology: manifest.modelTopology,
      weightSpecs,
      weightData: weightData.buffer.slice(
        weightData.byteOffset,
        weightData.byteOffset + weightData.byteLength,
      ),
    }),
  )
}

/** Write model.json + weights.bin next to each other under dir. */
export async function saveModelToDisk(model: tf.LayersModel, dir: string): Promise<string> {
  mkdirSync(dir, { recursive: true })
  await model.save(
    tf.io.withSaveHandler(async (artifacts) => {
      const weightData = artifacts.weightData as ArrayBuffer
      writeFileSync(join(dir, 'weights.bin'), Buffer.from(weightData))
      const manifest = {
        modelTopology: artifacts.modelTopology,
        weightsManifest: [{ paths: ['weights.bin'], weights: artifacts.weightSpecs }],
      }
      writeFileSync(join(dir, 'model.json'), JSON.stringify(manifest))
      return { modelArtifactsInfo: { dateSaved: new Date(), modelTopologyType: 'JSON' } }
    }),
  )
  return join(dir, 'model.json')
}

/**
 * The feature layer: last ReLU-activated layer before the classifier head.
 * Falls back to the penultimate layer if no explicit ReLU is found.
 */
export function featureLayer(model: tf.LayersModel): tf.layers.Layer {
  const layers = model.layers
  if (layers.length < 2) {
    throw new Error('model needs at least two layers to expose a penultimate output')
  }
  for (let i = layers.length - 2; i >= 0; i--) {
    const config = layers[i].getConfig() as { activation?: string }
    const className = layers[i].getClassName()
    if (config.activation === 'relu' || className === 'ReLU') {
      return layers[i]
    }
  }
  return layers[layers.length - 2]
}

/** Last layer with a rank-4 (spatial) output, used as the Grad-CAM target. */
export function lastSpatialLayer(model: tf.LayersModel): tf.layers.Layer {
  for (let i = model.layers.length - 1; i >= 0; i--) {
    const shape = model.layers[i].outputShape as number[]
    if (Array.isArray(shape) && shape.length === 4) {
      return model.layers[i]
    }
  }
  throw new Error('model has no spatial (rank-4) layer output')
}
