/** Transport to the engine's kernel endpoint.
 *
 * Requests go to `cutremain kernel` as JSON lines on stdin; one JSON
 * response per line comes back on stdout.  Kernel-level failures are
 * reported in-band ({ok: false, error: ...}) and never crash the process,
 * so a batch always yields one response per request.
 *
 * Set CUTREMAIN_CLI to override the executable (whitespace-separated,
 * e.g. "python3 -m cutremain.cli").
 */

import { spawnSync } from 'node:child_process'
import { EngineError } from './errors.js'
import type { KernelRequest, KernelResponse } from './wire.js'

const MAX_BUFFER = 1 << 30 // corpus-sized batches move tens of megabytes

export function engineCommand(): string[] {
  const override = process.env.CUTREMAIN_CLI
  const parts = override ? override.split(/\s+/).filter(Boolean) : ['cutremain']
  if (parts.length === 0) {
    throw new EngineError('CUTREMAIN_CLI is set but empty')
  }
  return parts
}

/** Run a batch of kernel requests through one engine process. */
export function runKernelBatch(requests: readonly KernelRequest[]): KernelResponse[] {
  if (requests.length === 0) {
    return []
  }
  const [command, ...prefix] = engineCommand()
  const input = requests.map((r) => JSON.stringify(r)).join('\n') + '\n'
  const result = spawnSync(command, [...prefix, 'kernel'], {
    input,
    encoding: 'utf8',
    maxBuffer: MAX_BUFFER,
  })
  if (result.error) {
    throw new EngineError(`failed to run ${command}: ${result.error.message}`)
  }
  if (result.status !== 0) {
    throw new EngineError(
      `engine exited with status ${result.status}: ${(result.stderr ?? '').trim()}`,
    )
  }
  const lines = result.stdout.split('\n').filter((line) => line.trim().length > 0)
  if (lines.length !== requests.length) {
    throw new EngineError(`sent ${requests.length} requests but received ${lines.length} responses`)
  }
  return lines.map((line, i) => {
    try {
      return JSON.parse(line) as KernelResponse
    } catch {
      throw new EngineError(`response ${i} is not JSON: ${line.slice(0, 120)}`)
    }
  })
}

/** Run a single kernel request. */
export function runKernel(request: KernelRequest): KernelResponse {
  return runKernelBatch([request])[0]
}
