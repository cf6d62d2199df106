/** Buffer bindings to the region-supervised augmentation engine.
 *
 * Five functions mirror the engine kernels one-to-one over caller-provided
 * contiguous typed arrays; all computation happens engine-side, this layer
 * only marshals buffers and surfaces the engine's error taxonomy.  Results
 * are byte-for-byte what the engine produces (see runParitySelfTest).
 */

import { readFileSync } from 'node:fs'
import { runKernel, runKernelBatch } from './engine.js'
import { KernelError } from './errors.js'
import {
  decodeImage,
  decodeLabel,
  decodeMask,
  encodeBoxes,
  encodeImage,
  encodeLabel,
  encodeMask,
  type KernelRequest,
  type KernelResponse,
  type WireSample,
} from './wire.js'
import type {
  AugmentedResult,
  Box,
  BufferImage,
  Label,
  MaskBuffer,
  MaskedOperand,
  Provenance,
} from './types.js'

export const version = '0.1.0'

export type {
  AugmentedResult,
  Box,
  BufferImage,
  Label,
  MaskBuffer,
  MaskedOperand,
  Provenance,
}
export { KernelError, EngineError } from './errors.js'
export { engineCommand, runKernel, runKernelBatch } from './engine.js'
export type { KernelRequest, KernelResponse } from './wire.js'

function unwrap(response: KernelResponse): KernelResponse {
  if (!response.ok) {
    const error = response.error ?? { kind: 'EngineError', message: 'unknown engine failure' }
    throw new KernelError(error.kind, error.message)
  }
  return response
}

function decodeSample(wire: WireSample): AugmentedResult {
  return {
    image: decodeImage(wire.image),
    label: decodeLabel(wire.label),
    provenance: {
      method: wire.provenance.method,
      ratio: wire.provenance.ratio ? [wire.provenance.ratio[0], wire.provenance.ratio[1]] : null,
      sources: [...wire.provenance.sources],
      seed: wire.provenance.seed,
    },
  }
}

/** Union mask of the boxes rasterized onto a width x height grid. */
export function rasterizeMask(boxes: readonly Box[], width: number, height: number): MaskBuffer {
  const response = unwrap(
    runKernel({ op: 'rasterize_mask', width, height, boxes: encodeBoxes(boxes) }),
  )
  return decodeMask(response.mask!)
}

/** Keep the annotated region(s), zero the rest; one result per ratio pair. */
export function cutAndRemain(
  image: BufferImage,
  label: Label,
  boxes: readonly Box[],
  ratios: readonly number[] = [1.0, 1.5, 2.0],
  sourceId = '',
): AugmentedResult[] {
  const response = unwrap(
    runKernel({
      op: 'cut_and_remain',
      image: encodeImage(image),
      label: encodeLabel(label),
      boxes: encodeBoxes(boxes),
      ratios: [...ratios],
      source_id: sourceId,
    }),
  )
  return response.samples!.map(decodeSample)
}

export interface MixupOptions {
  /** Mixing coefficient in [0, 1]; drawn from Beta(alpha, alpha) when omitted. */
  lam?: number | null
  alpha?: number
  /** Seed for the lambda draw; required when lam is omitted. */
  seed?: number | null
}

/** Blend two mask-restricted images: lam * (M_A * x_A) + (1 - lam) * (M_B * x_B). */
export function supMixup(
  a: MaskedOperand,
  b: MaskedOperand,
  options: MixupOptions = {},
): AugmentedResult {
  const response = unwrap(
    runKernel({
      op: 'sup_mixup',
      image_a: encodeImage(a.image),
      label_a: encodeLabel(a.label),
      mask_a: encodeMask(a.mask),
      image_b: encodeImage(b.image),
      label_b: encodeLabel(b.label),
      mask_b: encodeMask(b.mask),
      lam: options.lam ?? null,
      alpha: options.alpha ?? 1.0,
      seed: options.seed ?? null,
    }),
  )
  return decodeSample(response.sample!)
}

export interface CutoutOptions {
  /** Square side in pixels; defaults engine-side to floor(min(W, H) / 4). */
  side?: number | null
  seed: number
}

/** Zero a seeded random square placed entirely outside the annotation mask. */
export function supCutout(
  image: BufferImage,
  label: Label,
  mask: MaskBuffer,
  options: CutoutOptions,
): AugmentedResult {
  const response = unwrap(
    runKernel({
      op: 'sup_cutout',
      image: encodeImage(image),
      label: encodeLabel(label),
      mask: encodeMask(mask),
      side: options.side ?? null,
      seed: options.seed,
    }),
  )
  return decodeSample(response.sample!)
}

/** First image inside its mask, second image outside; label of the first. */
export function supCutmix(
  a: MaskedOperand,
  b: { image: BufferImage; label: Label },
): AugmentedResult {
  const response = unwrap(
    runKernel({
      op: 'sup_cutmix',
      image_a: encodeImage(a.image),
      label_a: encodeLabel(a.label),
      mask_a: encodeMask(a.mask),
      image_b: encodeImage(b.image),
      label_b: encodeLabel(b.label),
    }),
  )
  return decodeSample(response.sample!)
}

export interface ParityFailure {
  name: string
  reason: string
}

export interface ParityResult {
  total: number
  passed: number
  failures: ParityFailure[]
}

interface ParityFixture {
  name: string
  request: KernelRequest
  expected: KernelResponse
}

function sameResponse(actual: KernelResponse, expected: KernelResponse): string | null {
  if (actual.ok !== expected.ok) {
    return `ok mismatch: ${actual.ok} vs ${expected.ok}`
  }
  if (!expected.ok) {
    if (actual.error?.kind !== expected.error?.kind) {
      return `error kind mismatch: ${actual.error?.kind} vs ${expected.error?.kind}`
    }
    if (actual.error?.message !== expected.error?.message) {
      return 'error message mismatch'
    }
    return null
  }
  // Base64 payloads encode the raw bytes, so key-order-independent JSON
  // equality is a bit-exact comparison.
  if (JSON.stringify(sortedDeep(actual)) !== JSON.stringify(sortedDeep(expected))) {
    return 'payload mismatch'
  }
  return null
}

function sortedDeep(value: unknown): unknown {
  if (Array.isArray(value)) {
    return value.map(sortedDeep)
  }
  if (value && typeof value === 'object') {
    const entries = Object.entries(value as Record<string, unknown>).sort(([a], [b]) =>
      a < b ? -1 : a > b ? 1 : 0,
    )
    return Object.fromEntries(entries.map(([k, v]) => [k, sortedDeep(v)]))
  }
  return value
}

/** Replay a frozen parity corpus through the engine and compare bit-exactly.
 *
 * The corpus is JSON lines of {name, request, expected}, produced by the
 * engine's `parity` subcommand.
 */
export function runParitySelfTest(corpusPath: string): ParityResult {
  const lines = readFileSync(corpusPath, 'utf8')
    .split('\n')
    .filter((line) => line.trim().length > 0)
  const fixtures: ParityFixture[] = lines.map((line) => JSON.parse(line))
  const responses = runKernelBatch(fixtures.map((f) => f.request))
  const failures: ParityFailure[] = []
  fixtures.forEach((fixture, i) => {
    const reason = sameResponse(responses[i], fixture.expected)
    if (reason) {
      failures.push({ name: fixture.name, reason })
    }
  })
  return { total: fixtures.length, passed: fixtures.length - failures.length, failures }
}
