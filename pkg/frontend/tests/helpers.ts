import { mkdirSync, writeFileSync } from 'node:fs'
import { dirname } from 'node:path'

import * as tf from '@tensorflow/tfjs'
import { PNG } from 'pngjs'

export const INPUT_SIZE = 8

/** conv -> relu feature stack -> dense classifier head over small inputs. */
export function tinyModel(classes = 3): tf.LayersModel {
  const model = tf.sequential()
  model.add(
    tf.layers.conv2d({
      filters: 4,
      kernelSize: 3,
      activation: 'relu',
      inputShape: [INPUT_SIZE, INPUT_SIZE, 3],
    }),
  )
  model.add(tf.layers.flatten())
  model.add(tf.layers.dense({ units: 6, activation: 'relu' }))
  model.add(tf.layers.dense({ units: classes, activation: 'softmax' }))
  return model
}

/** Write an RGB PNG whose pixel (x, y) is produced by `pixel`. */
export function writePng(
  path: string,
  pixel: (x: number, y: number) => [number, number, number],
  size = INPUT_SIZE,
) {
  const png = new PNG({ width: size, height: size })
  for (let y = 0; y < size; y++) {
    for (let x = 0; x < size; x++) {
      const i = (y * size + x) * 4
      const [r, g, b] = pixel(x, y)
      png.data[i] = r
      png.data[i + 1] = g
      png.data[i + 2] = b
      png.data[i + 3] = 255
    }
  }
  mkdirSync(dirname(path), { recursive: true })
  writeFileSync(path, PNG.sync.write(png))
}

/** Deterministic per-seed pixel pattern so images differ between classes. */
export function patternPixel(seed: number) {
  return (x: number, y: number): [number, number, number] => [
    (x * 31 + seed * 97) % 256,
    (y * 53 + seed * 13) % 256,
    ((x + y) * 17 + seed * 71) % 256,
  ]
}
