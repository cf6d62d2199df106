/** Wire codec for the engine's JSON-lines kernel endpoint.
 *
 * Images travel as base64 little-endian float64, row-major (H, W, C);
 * masks as base64 uint8 (H, W).  Decoding copies into a fresh aligned
 * buffer (base64 output is not guaranteed 8-byte aligned); encoding views
 * the caller's buffer without transforming it, so a decode/encode round
 * trip is byte-identical.
 */

import { Buffer } from 'node:buffer'
import type { Box, BufferImage, Label, MaskBuffer } from './types.js'

export interface WireImage {
  width: number
  height: number
  channels: number
  dtype: string
  data: string
}

export interface WireMask {
  width: number
  height: number
  data: string
}

export interface WireLabel {
  kind: string
  num_classes: number
  index?: number | null
  values?: number[]
}

export interface WireProvenance {
  method: string
  ratio: number[] | null
  sources: string[]
  seed: number | null
}

export interface WireSample {
  image: WireImage
  label: WireLabel
  provenance: WireProvenance
}

export type KernelRequest = Record<string, unknown> & { op: string }

export interface KernelErrorBody {
  kind: string
  message: string
}

export interface KernelResponse {
  ok: boolean
  error?: KernelErrorBody
  mask?: WireMask
  sample?: WireSample
  samples?: WireSample[]
}

export function bytesToBase64(bytes: Uint8Array): string {
  return Buffer.from(bytes.buffer, bytes.byteOffset, bytes.byteLength).toString('base64')
}

export function base64ToBytes(data: string): Uint8Array {
  const decoded = Buffer.from(data, 'base64')
  // Copy into a standalone aligned ArrayBuffer.
  const out = new Uint8Array(decoded.byteLength)
  out.set(decoded)
  return out
}

export function encodeImage(image: BufferImage): WireImage {
  const expected = image.width * image.height * image.channels
  if (image.data.length !== expected) {
    throw new RangeError(
      `image buffer holds ${image.data.length} values, expected ${expected} (w*h*c)`,
    )
  }
  const view = new Uint8Array(image.data.buffer, image.data.byteOffset, image.data.byteLength)
  return {
    width: image.width,
    height: image.height,
    channels: image.channels,
    dtype: 'float64',
    data: bytesToBase64(view),
  }
}

export function decodeImage(wire: WireImage): BufferImage {
  const bytes = base64ToBytes(wire.data)
  const expected = wire.width * wire.height * wire.channels * 8
  if (bytes.byteLength !== expected) {
    throw new RangeError(`image payload holds ${bytes.byteLength} bytes, expected ${expected}`)
  }
  return {
    width: wire.width,
    height: wire.height,
    channels: wire.channels,
    data: new Float64Array(bytes.buffer),
  }
}

export function encodeMask(mask: MaskBuffer): WireMask {
  const expected = mask.width * mask.height
  if (mask.data.length !== expected) {
    throw new RangeError(`mask buffer holds ${mask.data.length} values, expected ${expected}`)
  }
  return { width: mask.width, height: mask.height, data: bytesToBase64(mask.data) }
}

export function decodeMask(wire: WireMask): MaskBuffer {
  const bytes = base64ToBytes(wire.data)
  if (bytes.byteLength !== wire.width * wire.height) {
    throw new RangeError(
      `mask payload holds ${bytes.byteLength} bytes, expected ${wire.width * wire.height}`,
    )
  }
  return { width: wire.width, height: wire.height, data: bytes }
}

export function encodeLabel(label: Label): WireLabel {
  if (label.kind === 'index') {
    return { kind: 'index', num_classes: label.numClasses, index: label.index }
  }
  return { kind: label.kind, num_classes: label.values.length, values: [...label.values] }
}

export function decodeLabel(wire: WireLabel): Label {
  if (wire.kind === 'index') {
    return { kind: 'index', index: wire.index as number, numClasses: wire.num_classes }
  }
  if (wire.kind === 'multilabel' || wire.kind === 'soft') {
    return { kind: wire.kind, values: [...(wire.values as number[])] }
  }
  throw new RangeError(`unknown label kind ${JSON.stringify(wire.kind)}`)
}

export function encodeBoxes(boxes: readonly Box[]): number[][] {
  return boxes.map((b) => [b.cx, b.cy, b.w, b.h])
}
