import { describe, expect, it } from 'vitest'

import {
  controlMessage,
  decodePcmBlock,
  parseServerMessage,
  sameControl,
  tapMessage,
} from '../src/protocol.js'

function pcmFrame(samples: Array<[number, number]>): ArrayBuffer {
  const buf = new ArrayBuffer(8 + samples.length * 4)
  const view = new DataView(buf)
  const magic = 'PCMB'
  for (let i = 0; i < 4; i++) view.setUint8(i, magic.charCodeAt(i))
  view.setUint32(4, samples.length, true)
  samples.forEach(([l, r], i) => {
    view.setInt16(8 + i * 4, l, true)
    view.setInt16(10 + i * 4, r, true)
  })
  return buf
}

describe('decodePcmBlock', () => {
  it('decodes header and interleaved samples', () => {
    const block = decodePcmBlock(pcmFrame([[32767, -32768], [0, 16384]]))
    expect(block.frameCount).toBe(2)
    expect(block.left[0]).toBeCloseTo(32767 / 32768, 6)
    expect(block.right[0]).toBe(-1)
    expect(block.left[1]).toBe(0)
    expect(block.right[1]).toBeCloseTo(0.5, 6)
  })

  it('rejects a bad magic', () => {
    const buf = pcmFrame([[1, 1]])
    new DataView(buf).setUint8(0, 0x58)
    expect(() => decodePcmBlock(buf)).toThrow(/magic/)
  })

  it('rejects a length mismatch', () => {
    const buf = pcmFrame([[1, 1], [2, 2]])
    new DataView(buf).setUint32(4, 5, true)
    expect(() => decodePcmBlock(buf)).toThrow(/length/)
  })

  it('rejects a truncated header', () => {
    expect(() => decodePcmBlock(new ArrayBuffer(4))).toThrow(/short/)
  })
})

describe('parseServerMessage', () => {
  it('accepts known message types', () => {
    const msg = parseServerMessage('{"type":"speech","time":1.5,"text":"Attraversa","instruction":"cross"}')
    expect(msg).not.toBeNull()
    expect(msg!.type).toBe('speech')
  })

  it('rejects junk', () => {
    expect(parseServerMessage('not json')).toBeNull()
    expect(parseServerMessage('{"type":"warp-drive"}')).toBeNull()
    expect(parseServerMessage('42')).toBeNull()
  })
})

describe('client messages', () => {
  it('serializes controls with every channel', () => {
    const text = controlMessage({ forward: 1, turn: -0.5, sidestep: 0.25, pitch_rate: 0 })
    expect(JSON.parse(text)).toEqual({
      type: 'control', forward: 1, turn: -0.5, sidestep: 0.25, pitch_rate: 0,
    })
  })

  it('serializes taps', () => {
    expect(JSON.parse(tapMessage())).toEqual({ type: 'tap' })
  })

  it('compares controls by value', () => {
    const a = { forward: 1, turn: 0, sidestep: 0, pitch_rate: 0 }
    expect(sameControl(a, { ...a })).toBe(true)
    expect(sameControl(a, { ...a, turn: 0.1 })).toBe(false)
  })
})
