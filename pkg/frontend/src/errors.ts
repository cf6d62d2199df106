/** Error raised by the engine for a rejected kernel request.
 *
 * `kind` carries the engine's own error taxonomy verbatim
 * (EmptyMaskError, ShapeMismatchError, PlacementError, ...), so callers can
 * branch on it exactly as engine-side code would.
 */
export class KernelError extends Error {
  readonly kind: string

  constructor(kind: string, message: string) {
    super(message)
    this.name = 'KernelError'
    this.kind = kind
  }
}

/** The engine process itself could not be run or spoke garbage. */
export class EngineError extends Error {
  constructor(message: string) {
    super(message)
    this.name = 'EngineError'
  }
}
