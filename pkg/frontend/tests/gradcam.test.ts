import { execFileSync } from 'node:child_process'
import { mkdtempSync, rmSync } from 'node:fs'
import { tmpdir } from 'node:os'
import { join } from 'node:path'

import * as tf from '@tensorflow/tfjs'
import { afterAll, describe, expect, it } from 'vitest'

import { writeActivationMaps } from '../src/format.js'
import { computeActivationMaps, gradCam } from '../src/gradcam.js'
import { INPUT_SIZE, tinyModel } from './helpers.js'

const dir = mkdtempSync(join(tmpdir(), 'cam-'))
afterAll(() => rmSync(dir, { recursive: true, force: true }))

function pythonHasToolkit(): boolean {
  try {
    execFileSync('python3', ['-c', 'import dualhal'], { stdio: 'ignore' })
    return true
  } catch {
    return false
  }
}

describe('gradCam', () => {
  const model = tinyModel()

  it('produces input-resolution maps with values in [0,1]', () => {
    const img = tf.randomUniform([1, INPUT_SIZE, INPUT_SIZE, 3]) as tf.Tensor4D
    const map = gradCam(model, img, 0)
    img.dispose()
    expect(map).toHaveLength(INPUT_SIZE * INPUT_SIZE)
    for (const v of map) {
      expect(v).toBeGreaterThanOrEqual(0)
      expect(v).toBeLessThanOrEqual(1)
    }
  })

  it('gives a near-constant map for a constant image', () => {
    const img = tf.fill([1, INPUT_SIZE, INPUT_SIZE, 3], 0.5) as tf.Tensor4D
    const map = gradCam(model, img, 1)
    img.dispose()
    // Interior pixels (away from conv padding effects) should barely vary.
    const interior: number[] = []
    for (let y = 2; y < INPUT_SIZE - 2; y++) {
      for (let x = 2; x < INPUT_SIZE - 2; x++) {
        interior.push(map[y * INPUT_SIZE + x])
      }
    }
    const spread = Math.max(...interior) - Math.min(...interior)
    expect(spread).toBeLessThan(0.35)
  })

  it('is deterministic for a fixed model and image', () => {
    const img = tf.randomUniform([1, INPUT_SIZE, INPUT_SIZE, 3]) as tf.Tensor4D
    const a = gradCam(model, img, 2)
    const b = gradCam(model, img, 2)
    img.dispose()
    expect([...a]).toEqual([...b])
  })
})

describe('computeActivationMaps', () => {
  it('keys entries by sample and class', () => {
    const model = tinyModel()
    const img = tf.randomUniform([1, INPUT_SIZE, INPUT_SIZE, 3]) as tf.Tensor4D
    const maps = computeActivationMaps(model, [
      { sampleId: 'img_0', classId: 'base_0000', image: img, classIndex: 0 },
    ])
    img.dispose()
    const entry = maps.entries.get('img_0 base_0000')!
    expect(entry.height).toBe(INPUT_SIZE)
    expect(entry.width).toBe(INPUT_SIZE)
  })

  it.skipIf(!pythonHasToolkit())('emitted file loads in the core toolkit', () => {
    const model = tinyModel()
    const img = tf.randomUniform([1, INPUT_SIZE, INPUT_SIZE, 3]) as tf.Tensor4D
    const maps = computeActivationMaps(model, [
      { sampleId: 'img_0', classId: 'base_0000', image: img, classIndex: 0 },
    ])
    img.dispose()
    const path = join(dir, 'maps.bank')
    writeActivationMaps(maps, path)
    const out = execFileSync('python3', [
      '-c',
      `from dualhal.banks import load_bank\nm = load_bank(${JSON.stringify(path)})\nk = next(iter(m.entries))\nprint(k[0], k[1], m.entries[k].shape)`,
    ])
    expect(out.toString().trim()).toBe(`img_0 base_0000 (${INPUT_SIZE}, ${INPUT_SIZE})`)
  })
})
