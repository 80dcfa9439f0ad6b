/**
 * Gradient-weighted class activation maps.
 *
 * Gradients of a class score w.r.t. the last spatial layer weight its channel
 * activations; the ReLU of the weighted sum, min-max normalized to [0, 1] and
 * bilinearly upsampled to the input resolution, is the attention map.
 */
import * as tf from '@tensorflow/tfjs'

import type { ActivationMapSet } from './format.js'
import { mapKey } from './format.js'
import { lastSpatialLayer } from './model.js'

interface SplitModel {
  conv: tf.LayersModel
  head: tf.LayersModel
}

/** Split a sequential-style model at its last spatial layer. */
function splitAtSpatial(model: tf.LayersModel): SplitModel {
  const spatial = lastSpatialLayer(model)
  const conv = tf.model({ inputs: model.inputs, outputs: spatial.output as tf.SymbolicTensor })
  const spatialIndex = model.layers.indexOf(spatial)
  const shape = (spatial.outputShape as number[]).slice(1)
  const headInput = tf.input({ shape })
  let x: tf.SymbolicTensor = headInput
  for (const layer of model.layers.slice(spatialIndex + 1)) {
    x = layer.apply(x) as tf.SymbolicTensor
  }
  return { conv, head: tf.model({ inputs: headInput, outputs: x }) }
}

/** One [0,1] map of shape [H, W] (input resolution) for the given class unit. */
export function gradCam(model: tf.LayersModel, image: tf.Tensor4D, classIndex: number): Float32Array {
  const [, height, width] = image.shape
  const map = tf.tidy(() => {
    const { conv, head } = splitAtSpatial(model)
    const activations = conv.predict(image) as tf.Tensor4D
    const score = (a: tf.Tensor) =>
      (head.predict(a) as tf.Tensor2D).slice([0, classIndex], [1, 1]).sum()
    const grads = tf.grad(score)(activations)
    const channelWeights = grads.mean([1, 2])
    const weighted = activations.mul(channelWeights.reshape([1, 1, 1, -1]))
    const cam = tf.relu(weighted.sum(3)) as tf.Tensor3D
    const min = cam.min()
    const range = cam.max().sub(min)
    const normalized = cam.sub(min).div(range.add(1e-8))
    const upsampled = tf.image.resizeBilinear(normalized.expandDims(3) as tf.Tensor4D, [
      height,
      width,
    ])
    return upsampled.clipByValue(0, 1)
  })
  const values = map.dataSync() as Float32Array
  map.dispose()
  return values.slice()
}

export interface MapRequest {
  sampleId: string
  classId: string
  image: tf.Tensor4D
  classIndex: number
}

export function computeActivationMaps(model: tf.LayersModel, requests: MapRequest[]): ActivationMapSet {
  const entries: ActivationMapSet['entries'] = new Map()
  for (const req of requests) {
    const [, height, width] = req.image.shape
    entries.set(mapKey(req.sampleId, req.classId), {
      sampleId: req.sampleId,
      classId: req.classId,
      height,
      width,
      values: gradCam(model, req.image, req.classIndex),
    })
  }
  return { entries }
}
