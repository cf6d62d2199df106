/** Public data shapes exchanged with the augmentation engine. */

/** Center-form box: center (cx, cy), width w, height h, pixel units. */
export interface Box {
  cx: number
  cy: number
  w: number
  h: number
}

/** Contiguous row-major (H, W, C) image with intensities in [0, 1]. */
export interface BufferImage {
  width: number
  height: number
  channels: number
  data: Float64Array
}

/** Contiguous row-major (H, W) mask; 1 marks pixels to keep. */
export interface MaskBuffer {
  width: number
  height: number
  data: Uint8Array
}

export type Label =
  | { kind: 'index'; index: number; numClasses: number }
  | { kind: 'multilabel'; values: number[] }
  | { kind: 'soft'; values: number[] }

export interface Provenance {
  method: string
  ratio: [number, number] | null
  sources: string[]
  seed: number | null
}

export interface AugmentedResult {
  image: BufferImage
  label: Label
  provenance: Provenance
}

/** An image together with its label and annotation mask. */
export interface MaskedOperand {
  image: BufferImage
  label: Label
  mask: MaskBuffer
}
