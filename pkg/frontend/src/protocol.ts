// Bridge wire protocol: JSON text frames plus binary PCM blocks with an
// 8-byte header ("PCMB" magic + uint32-LE frame count, then interleaved
// 16-bit stereo samples).

export interface Layout {
  origin: [number, number]
  orientation: number
  stripe_count: number
  stripe_width: number
  stripe_length: number
}

export interface HelloMsg {
  type: 'hello'
  sample_rate: number
  block_frames: number
  mode: string
  locale: string
  control_rate: number
  timeout_s: number
  layout: Layout
}

export interface StateMsg {
  type: 'state'
  time: number
  x: number
  y: number
  heading: number
  pitch: number
  aligned: boolean
}

export interface InstructionMsg {
  type: 'instruction'
  time: number
  name: string
  quantity: number
  lateral_bias: number
}

export interface SpeechMsg {
  type: 'speech'
  time: number
  text: string
  instruction: string
}

export interface MetricsMsg {
  type: 'metrics'
  mode: string
  seed: number
  time_to_align_s: number | null
  time_to_cross_s: number | null
  message_count: number
  tap_count: number
  completed: boolean
  duration_s: number
  aborted: boolean
}

export type ServerMessage = HelloMsg | StateMsg | InstructionMsg | SpeechMsg | MetricsMsg

const MESSAGE_TYPES = new Set(['hello', 'state', 'instruction', 'speech', 'metrics'])

export function parseServerMessage(text: string): ServerMessage | null {
  let raw: unknown
  try {
    raw = JSON.parse(text)
  } catch {
    return null
  }
  if (typeof raw !== 'object' || raw === null) return null
  const type = (raw as { type?: unknown }).type
  if (typeof type !== 'string' || !MESSAGE_TYPES.has(type)) return null
  return raw as ServerMessage
}

export interface PcmBlock {
  frameCount: number
  left: Float32Array<ArrayBuffer>
  right: Float32Array<ArrayBuffer>
}

const MAGIC = [0x50, 0x43, 0x4d, 0x42] // "PCMB"

export function decodePcmBlock(buffer: ArrayBuffer): PcmBlock {
  if (buffer.byteLength < 8) throw new Error('PCM frame too short')
  const bytes = new Uint8Array(buffer, 0, 4)
  for (let i = 0; i < 4; i++) {
    if (bytes[i] !== MAGIC[i]) throw new Error('bad PCM magic')
  }
  const view = new DataView(buffer)
  const frameCount = view.getUint32(4, true)
  if (buffer.byteLength !== 8 + frameCount * 4) {
    throw new Error(`PCM length mismatch: ${buffer.byteLength} bytes for ${frameCount} frames`)
  }
  const left = new Float32Array(frameCount)
  const right = new Float32Array(frameCount)
  for (let i = 0; i < frameCount; i++) {
    left[i] = view.getInt16(8 + i * 4, true) / 32768
    right[i] = view.getInt16(10 + i * 4, true) / 32768
  }
  return { frameCount, left, right }
}

export interface ControlState {
  forward: number
  turn: number
  sidestep: number
  pitch_rate: number
}

export const IDLE_CONTROL: ControlState = { forward: 0, turn: 0, sidestep: 0, pitch_rate: 0 }

export function controlMessage(c: ControlState): string {
  return JSON.stringify({
    type: 'control',
    forward: c.forward,
    turn: c.turn,
    sidestep: c.sidestep,
    pitch_rate: c.pitch_rate,
  })
}

export function tapMessage(): string {
  return JSON.stringify({ type: 'tap' })
}

export function sameControl(a: ControlState, b: ControlState): boolean {
  return a.forward === b.forward && a.turn === b.turn &&
    a.sidestep === b.sidestep && a.pitch_rate === b.pitch_rate
}
