/** Visual feature extraction: penultimate post-ReLU activations per image. */
import { readFileSync, readdirSync } from 'node:fs'
import { join } from 'node:path'

import * as tf from '@tensorflow/tfjs'
import { PNG } from 'pngjs'

import type { FeatureBank, FeatureClass, Split } from './format.js'
import { featureLayer } from './model.js'

/** Decode a PNG into a [0,1] float tensor of shape [H, W, 3]. */
export function loadPng(path: string): tf.Tensor3D {
  const png = PNG.sync.read(readFileSync(path))
  const pixels = new Float32Array(png.height * png.width * 3)
  for (let i = 0; i < png.height * png.width; i++) {
    pixels[i * 3] = png.data[i * 4] / 255
    pixels[i * 3 + 1] = png.data[i * 4 + 1] / 255
    pixels[i * 3 + 2] = png.data[i * 4 + 2] / 255
  }
  return tf.tensor3d(pixels, [png.height, png.width, 3])
}

/** Model truncated at the feature layer; spatial outputs are average-pooled flat. */
export function featureModel(model: tf.LayersModel): tf.LayersModel {
  let output = featureLayer(model).output as tf.SymbolicTensor
  if (output.shape.length === 4) {
    output = tf.layers.globalAveragePooling2d({}).apply(output) as tf.SymbolicTensor
  }
  return tf.model({ inputs: model.inputs, outputs: output })
}

/** One non-negative d-vector per image row, in input order. */
export function extractFeatures(model: tf.LayersModel, images: tf.Tensor4D): Float32Array[] {
  const extractor = featureModel(model)
  const out = tf.tidy(() => tf.relu(extractor.predict(images) as tf.Tensor2D))
  const data = out.dataSync() as Float32Array
  const dim = out.shape[1]
  out.dispose()
  const rows: Float32Array[] = []
  for (let i = 0; i < images.shape[0]; i++) {
    rows.push(data.slice(i * dim, (i + 1) * dim))
  }
  return rows
}

export interface ExtractionReport {
  bank: FeatureBank
  skipped: number
}

/**
 * Walk datasetRoot/<class_id>/*.png for every class in splits and build a
 * feature bank. Unreadable images are skipped and counted.
 */
export function extractDataset(
  model: tf.LayersModel,
  datasetRoot: string,
  splits: Map<string, Split>,
  batchSize = 16,
): ExtractionReport {
  const classes: FeatureClass[] = []
  let dim = 0
  let skipped = 0
  for (const [classId, split] of [...splits.entries()].sort()) {
    const dir = join(datasetRoot, classId)
    const files = readdirSync(dir)
      .filter((f) => f.endsWith('.png'))
      .sort()
    const rows: Float32Array[] = []
    for (let start = 0; start < files.length; start += batchSize) {
      const tensors: tf.Tensor3D[] = []
      for (const file of files.slice(start, start + batchSize)) {
        try {
          tensors.push(loadPng(join(dir, file)))
        } catch {
          skipped++
        }
      }
      if (tensors.length === 0) continue
      const batch = tf.stack(tensors) as tf.Tensor4D
      tensors.forEach((t) => t.dispose())
      rows.push(...extractFeatures(model, batch))
      batch.dispose()
    }
    if (rows.length === 0) {
      throw new Error(`class ${classId}: no readable images under ${dir}`)
    }
    dim = rows[0].length
    const flat = new Float32Array(rows.length * dim)
    rows.forEach((row, i) => flat.set(row, i * dim))
    classes.push({ classId, split, rows: rows.length, features: flat })
  }
  if (skipped > 0) {
    console.error(`skipped ${skipped} unreadable image(s)`)
  }
  return { bank: { dim, classes }, skipped }
}
